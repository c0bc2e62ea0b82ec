#include "lfl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lfl/error.hpp"
#include "lfl/plant.hpp"
#include "lfl/stats.hpp"

namespace lfl {

const std::vector<std::string>& study_names() {
  static const std::vector<std::string> names{"pid-vs-onoff", "speed-sweep", "detection",
                                              "fsm-timing",   "power",       "soak"};
  return names;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string g17(double v) { return fmt("%.17g", v); }
std::string g6(double v) { return fmt("%.6g", v); }

std::string hex16(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

// Column-aligned plain text table.
std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string l;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) l += "  ";
      l += cells[c];
      if (c + 1 < cells.size()) l.append(width[c] - cells[c].size(), ' ');
    }
    out += l + '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
  for (const auto& r : rows) line(r);
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

CsvTable parse_csv(const std::string& name, const std::string& text, const std::vector<std::string>& expected) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      if (cells != expected) throw ParseError(name + ": unexpected header", line_no, 1);
      t.header = cells;
      continue;
    }
    if (cells.size() != expected.size()) {
      throw ParseError(name + ": expected " + std::to_string(expected.size()) + " fields", line_no, 1);
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError(name + ": missing header", 1, 1);
  return t;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    throw ValidationError(what + ": not a number: '" + s + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& s, const std::string& what, int base = 10) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || p != s.data() + s.size()) throw ValidationError(what + ": not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s, const std::string& what) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw ValidationError(what + ": expected 0 or 1, got '" + s + "'");
}

const std::vector<std::string> kTrialHeader{"value", "trial",     "seed",   "fingerprint", "completed",  "mean_cm",
                                            "std_cm", "min_cm",   "max_cm", "rmse_cm",     "detections", "transitions"};
const std::vector<std::string> kTraceHeader{"label", "t", "error_cm"};
const std::vector<std::string> kEncounterHeader{"distance_m", "control", "index", "seed", "detected", "response_ms"};
const std::vector<std::string> kTimingHeader{"metric", "index", "seed", "success", "value_s"};
const std::vector<std::string> kPowerHeader{"mode", "current_ma", "duty_pct"};

std::string b01(bool b) { return b ? "1" : "0"; }

}  // namespace

FileSet study_data_files(const StudyData& d) {
  FileSet files;
  Config meta = d.meta;
  meta.set("study", d.study);
  if (d.soak) {
    const SoakResult& s = *d.soak;
    meta.set("soak.ticks_requested", std::to_string(s.ticks_requested));
    meta.set("soak.ticks", std::to_string(s.ticks));
    meta.set("soak.violations", std::to_string(s.violations));
    meta.set("soak.first_violation", s.first_violation.empty() ? "none" : s.first_violation);
    meta.set("soak.digest", hex16(s.digest));
    meta.set("soak.completed", b01(s.completed));
    meta.set("soak.max_abs_integral", g17(s.max_abs_integral));
    meta.set("soak.max_lost_counter", std::to_string(s.max_lost_counter));
    meta.set("soak.transitions", std::to_string(s.transitions));
  }
  if (d.power) meta.set("power.capacity_mah", g17(d.power->battery_capacity_mah));
  files["data/meta.txt"] = meta.serialize();

  if (!d.trials.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : d.trials) {
      rows.push_back({r.axis_value, std::to_string(r.trial), std::to_string(r.seed), r.fingerprint, b01(r.completed),
                      g17(r.error.mean), g17(r.error.std), g17(r.error.min), g17(r.error.max), g17(r.error.rmse),
                      std::to_string(r.detections), std::to_string(r.transitions)});
    }
    files["data/trials.csv"] = csv(kTrialHeader, rows);
  }
  if (!d.traces.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : d.traces)
      for (std::size_t i = 0; i < s.t.size(); ++i) rows.push_back({s.label, g17(s.t[i]), g17(s.error_cm[i])});
    files["data/traces.csv"] = csv(kTraceHeader, rows);
  }
  if (!d.encounters.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : d.encounters) {
      rows.push_back({g17(e.distance), b01(e.control), std::to_string(e.index), std::to_string(e.seed),
                      b01(e.detected), e.response_ms ? g17(*e.response_ms) : std::string()});
    }
    files["data/encounters.csv"] = csv(kEncounterHeader, rows);
  }
  if (!d.timings.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : d.timings) {
      rows.push_back({std::string(fsm_metric_name(s.metric)), std::to_string(s.index), std::to_string(s.seed),
                      b01(s.success), g17(s.value)});
    }
    files["data/timings.csv"] = csv(kTimingHeader, rows);
  }
  if (d.power) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : d.power->rows) rows.push_back({r.mode, g17(r.current_ma), g17(r.duty_pct)});
    files["data/power.csv"] = csv(kPowerHeader, rows);
  }
  return files;
}

StudyData parse_study_data(const FileSet& files) {
  auto meta_it = files.find("data/meta.txt");
  if (meta_it == files.end()) throw ValidationError("nothing to report: data/meta.txt is missing");
  StudyData d;
  d.meta = Config::parse(meta_it->second);
  d.study = d.meta.get_string("study", "");
  if (std::find(study_names().begin(), study_names().end(), d.study) == study_names().end()) {
    throw ValidationError("unknown study '" + d.study + "' in data/meta.txt");
  }

  if (auto it = files.find("data/trials.csv"); it != files.end()) {
    for (const auto& c : parse_csv(it->first, it->second, kTrialHeader).rows) {
      TrialRecord r;
      r.axis_value = c[0];
      r.trial = to_u64(c[1], "trial");
      r.seed = to_u64(c[2], "seed");
      r.fingerprint = c[3];
      r.completed = to_bool(c[4], "completed");
      r.error = {to_double(c[5], "mean"), to_double(c[6], "std"), to_double(c[7], "min"), to_double(c[8], "max"),
                 to_double(c[9], "rmse")};
      r.detections = to_u64(c[10], "detections");
      r.transitions = to_u64(c[11], "transitions");
      d.trials.push_back(std::move(r));
    }
  }
  if (auto it = files.find("data/traces.csv"); it != files.end()) {
    for (const auto& c : parse_csv(it->first, it->second, kTraceHeader).rows) {
      if (d.traces.empty() || d.traces.back().label != c[0]) d.traces.push_back({c[0], {}, {}});
      d.traces.back().t.push_back(to_double(c[1], "t"));
      d.traces.back().error_cm.push_back(to_double(c[2], "error_cm"));
    }
  }
  if (auto it = files.find("data/encounters.csv"); it != files.end()) {
    for (const auto& c : parse_csv(it->first, it->second, kEncounterHeader).rows) {
      EncounterRecord e;
      e.distance = to_double(c[0], "distance");
      e.control = to_bool(c[1], "control");
      e.index = to_u64(c[2], "index");
      e.seed = to_u64(c[3], "seed");
      e.detected = to_bool(c[4], "detected");
      if (!c[5].empty()) e.response_ms = to_double(c[5], "response_ms");
      d.encounters.push_back(e);
    }
  }
  if (auto it = files.find("data/timings.csv"); it != files.end()) {
    for (const auto& c : parse_csv(it->first, it->second, kTimingHeader).rows) {
      TimingSample s;
      auto m = fsm_metric_from_name(c[0]);
      if (!m) throw ValidationError("timings: unknown metric '" + c[0] + "'");
      s.metric = *m;
      s.index = to_u64(c[1], "index");
      s.seed = to_u64(c[2], "seed");
      s.success = to_bool(c[3], "success");
      s.value = to_double(c[4], "value");
      d.timings.push_back(s);
    }
  }
  if (auto it = files.find("data/power.csv"); it != files.end()) {
    PowerTable p;
    for (const auto& c : parse_csv(it->first, it->second, kPowerHeader).rows) {
      p.rows.push_back({c[0], to_double(c[1], "current"), to_double(c[2], "duty")});
    }
    p.battery_capacity_mah = d.meta.get_double("power.capacity_mah", 2200.0);
    d.power = p;
  }
  if (d.meta.has("soak.ticks")) {
    SoakResult s;
    s.ticks_requested = to_u64(d.meta.get_string("soak.ticks_requested", "0"), "soak.ticks_requested");
    s.ticks = to_u64(d.meta.get_string("soak.ticks", "0"), "soak.ticks");
    s.violations = to_u64(d.meta.get_string("soak.violations", "0"), "soak.violations");
    s.first_violation = d.meta.get_string("soak.first_violation", "none");
    if (s.first_violation == "none") s.first_violation.clear();
    s.digest = to_u64(d.meta.get_string("soak.digest", "0"), "soak.digest", 16);
    s.completed = d.meta.get_bool("soak.completed", false);
    s.max_abs_integral = d.meta.get_double("soak.max_abs_integral", 0.0);
    s.max_lost_counter = static_cast<int>(d.meta.get_int("soak.max_lost_counter", 0));
    s.transitions = to_u64(d.meta.get_string("soak.transitions", "0"), "soak.transitions");
    d.soak = s;
  }
  return d;
}

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  const double W = 720, H = 360, left = 64, right = 20, top = 36, bottom = 48;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = -1, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  // Symmetric about zero so positive and negative errors read alike.
  double ymax = std::max({std::abs(y0), std::abs(y1), 1e-9});
  y0 = -ymax, y1 = ymax;

  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * (H - top - bottom); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<line x1=\"" << fmt("%.2f", px(xv)) << "\" y1=\"" << top << "\" x2=\"" << fmt("%.2f", px(xv)) << "\" y2=\""
      << H - bottom << "\" stroke=\"#ddd\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << fmt("%.2f", py(yv)) << "\" x2=\"" << W - right << "\" y2=\""
      << fmt("%.2f", py(yv)) << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << fmt("%.2f", px(xv)) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
      << fmt("%.3g", xv) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << fmt("%.2f", py(yv) + 4) << "\" text-anchor=\"end\">"
      << fmt("%.3g", yv) << "</text>\n";
  }
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
    << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << x_label
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (top + H - bottom) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\"";
    if (s.dashed) o << " stroke-dasharray=\"5,3\"";
    o << " points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (i) o << ' ';
      o << fmt("%.2f", px(s.x[i])) << ',' << fmt("%.2f", py(s.y[i]));
    }
    o << "\"/>\n";
    double ly = top + 14 + 16.0 * static_cast<double>(k);
    o << "<line x1=\"" << W - right - 170 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - right - 145 << "\" y2=\""
      << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "")
      << "/>\n";
    o << "<text x=\"" << W - right - 140 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

namespace {

std::string ci_text(const SampleSummary& s, const char* f) {
  return "[" + fmt(f, s.ci_low) + ", " + fmt(f, s.ci_high) + "]";
}

std::vector<double> trial_means(const std::vector<const TrialRecord*>& group) {
  std::vector<double> v;
  for (const auto* r : group) v.push_back(r->error.mean);
  return v;
}

std::string controller_label(const std::string& value) {
  if (value == "pid") return "PID control";
  if (value == "onoff") return "On-off control";
  return value;
}

void render_pid_vs_onoff(const StudyData& d, FileSet& out, std::string& text) {
  auto groups = group_by_value(d.trials);
  const std::vector<const TrialRecord*>* onoff = nullptr;
  const std::vector<const TrialRecord*>* pid = nullptr;
  for (const auto& g : groups) {
    if (g.first == "onoff") onoff = &g.second;
    if (g.first == "pid") pid = &g.second;
  }
  if (!onoff || !pid) throw ValidationError("pid-vs-onoff: both controllers are required");

  text += "Tracking error by controller at base PWM " + d.meta.get_string("base_pwm", "?") + " (n=" +
          std::to_string(pid->size()) + " per controller, track " + d.meta.get_string("track", "?") + ", " +
          d.meta.get_string("duration", "?") + " s runs)\n\n";
  std::vector<std::vector<std::string>> rows, csv_rows;
  int no = 1;
  SampleSummary s_on, s_pid;
  for (const auto* g : {onoff, pid}) {
    auto v = trial_means(*g);
    SampleSummary s = summarize(v);
    (g == onoff ? s_on : s_pid) = s;
    std::size_t done = std::count_if(g->begin(), g->end(), [](const TrialRecord* r) { return r->completed; });
    const std::string& value = g->front()->axis_value;
    rows.push_back({std::to_string(no++), controller_label(value), fmt("%.3f", s.mean), fmt("%.3f", s.std),
                    fmt("%.3f", s.min), fmt("%.3f", s.max), ci_text(s, "%.3f"),
                    std::to_string(done) + "/" + std::to_string(g->size())});
    csv_rows.push_back({value, std::to_string(s.n), g6(s.mean), g6(s.std), g6(s.min), g6(s.max), g6(s.ci_low),
                        g6(s.ci_high), std::to_string(done)});
  }
  text += text_table({"No.", "Control type", "Mean (cm)", "Std dev (cm)", "Min (cm)", "Max (cm)", "95% CI (cm)",
                      "Completed"},
                     rows);
  const double mean_gain = 100.0 * (s_on.mean - s_pid.mean) / s_on.mean;
  const double std_gain = s_on.std > 0 ? 100.0 * (s_on.std - s_pid.std) / s_on.std : 0.0;
  text += "Improvement: mean " + fmt("%.1f", mean_gain) + "%, std dev " + fmt("%.1f", std_gain) +
          "%; PID/on-off mean ratio " + fmt("%.3f", s_pid.mean / s_on.mean) + "\n\n";

  auto a = trial_means(*onoff), b = trial_means(*pid);
  std::vector<std::vector<std::string>> test_rows;
  text += "t-tests, H1: on-off mean error > PID mean error\n";
  for (TTestKind kind : {TTestKind::kPooled, TTestKind::kWelch}) {
    TTestResult t = t_test(a, b, kind);
    const char* name = kind == TTestKind::kPooled ? "pooled" : "welch";
    text += std::string("  ") + (kind == TTestKind::kPooled ? "Pooled (Student)" : "Welch           ") +
            ": t = " + fmt("%.3f", t.t) + ", df = " + fmt("%.4g", t.df) + ", one-tailed p = " +
            fmt("%.3g", t.p_one_tailed) + ", two-tailed p = " + fmt("%.3g", t.p_two_tailed) + ", Cohen's d = " +
            fmt("%.3f", t.cohens_d) + (t.capped ? " (capped)" : "") + "\n";
    test_rows.push_back({name, g6(t.t), g6(t.df), g6(t.p_one_tailed), g6(t.p_two_tailed), g6(t.cohens_d),
                         b01(t.capped)});
  }
  text += "\n";
  out["tables/pid_vs_onoff.csv"] = csv(
      {"controller", "n", "mean_cm", "std_cm", "min_cm", "max_cm", "ci_low_cm", "ci_high_cm", "completed"}, csv_rows);
  out["tables/pid_vs_onoff_ttest.csv"] =
      csv({"kind", "t", "df", "p_one_tailed", "p_two_tailed", "cohens_d", "capped"}, test_rows);

  if (!d.traces.empty()) {
    std::vector<PlotSeries> series;
    std::string legend;
    for (const auto& tr : d.traces) {
      double sq = 0.0;
      for (double e : tr.error_cm) sq += e * e;
      double rmse_v = tr.error_cm.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(tr.error_cm.size()));
      bool is_pid = tr.label == "pid";
      std::string label = std::string(is_pid ? "PID" : tr.label == "onoff" ? "On-off" : tr.label) +
                          " (RMSE=" + fmt("%.2f", rmse_v) + ")";
      legend += "  " + label + "\n";
      series.push_back({label, tr.t, tr.error_cm, is_pid ? "#1f4fd1" : "#d1321f", !is_pid});
    }
    out["plots/pid_vs_onoff.svg"] =
        svg_line_plot("Lateral error, trial 0 of each controller", "Time (s)", "Error (cm)", series);
    text += "Figure plots/pid_vs_onoff.svg overlays trial 0 of each controller:\n" + legend + "\n";
  }
}

void render_sweep(const StudyData& d, FileSet& out, std::string& text) {
  const std::string axis = d.meta.get_string("axis", "value");
  auto groups = group_by_value(d.trials);
  text += "Tracking error across " + axis + " (n=" + std::to_string(groups.front().second.size()) +
          " per setting, track " + d.meta.get_string("track", "?") + ", " + d.meta.get_string("duration", "?") +
          " s runs)\n\n";
  std::vector<std::vector<std::string>> rows, csv_rows;
  std::vector<double> means;
  int no = 1;
  for (const auto& [value, g] : groups) {
    auto v = trial_means(g);
    SampleSummary s = summarize(v);
    means.push_back(s.mean);
    double max_e = 0.0, sq = 0.0;
    for (const auto* r : g) {
      max_e = std::max(max_e, r->error.max);
      sq += r->error.rmse * r->error.rmse;
    }
    double pooled_rmse = std::sqrt(sq / static_cast<double>(g.size()));
    std::size_t done = std::count_if(g.begin(), g.end(), [](const TrialRecord* r) { return r->completed; });
    std::string speed = d.meta.get_string("speed." + value, "");
    rows.push_back({std::to_string(no++), value, speed.empty() ? "-" : fmt("%.2f", std::stod(speed)),
                    fmt("%.3f", s.mean), fmt("%.3f", s.std), fmt("%.3f", max_e), fmt("%.3f", pooled_rmse),
                    ci_text(s, "%.3f"), std::to_string(done) + "/" + std::to_string(g.size())});
    csv_rows.push_back({value, speed.empty() ? "" : g6(std::stod(speed)), std::to_string(s.n), g6(s.mean), g6(s.std),
                        g6(s.min), g6(s.max), g6(s.ci_low), g6(s.ci_high), g6(max_e), g6(pooled_rmse),
                        std::to_string(done)});
  }
  text += text_table({"No.", axis, "Speed (m/s)", "Mean (cm)", "Std dev (cm)", "Max (cm)", "RMSE (cm)",
                      "95% CI (cm)", "Completed"},
                     rows);
  bool increasing = true;
  for (std::size_t i = 1; i < means.size(); ++i) increasing = increasing && means[i] > means[i - 1];
  text += std::string("Mean error strictly increasing along the axis: ") + (increasing ? "yes" : "no") + "\n\n";
  out["tables/sweep.csv"] = csv({"value", "speed_mps", "n", "mean_cm", "std_cm", "min_cm", "max_cm", "ci_low_cm",
                                 "ci_high_cm", "max_error_cm", "rmse_cm", "completed"},
                                csv_rows);
}

void render_detection(const StudyData& d, FileSet& out, std::string& text) {
  std::vector<double> distances;
  for (const auto& e : d.encounters) {
    if (std::find(distances.begin(), distances.end(), e.distance) == distances.end()) distances.push_back(e.distance);
  }
  text += "Obstacle detection by distance (threshold " + d.meta.get_string("threshold", "?") + " m, timeout " +
          d.meta.get_string("timeout", "?") + " s)\n\n";
  std::vector<std::vector<std::string>> rows, csv_rows;
  std::size_t all_n = 0, all_det = 0, all_ctl = 0, all_fp = 0;
  std::vector<double> all_resp;
  std::vector<double> rates;
  int no = 1;
  for (double dist : distances) {
    std::size_t n = 0, det = 0, ctl = 0, fp = 0;
    std::vector<double> resp;
    for (const auto& e : d.encounters) {
      if (e.distance != dist) continue;
      if (e.control) {
        ++ctl;
        fp += e.detected;
      } else {
        ++n;
        det += e.detected;
        if (e.response_ms) resp.push_back(*e.response_ms);
      }
    }
    all_n += n, all_det += det, all_ctl += ctl, all_fp += fp;
    all_resp.insert(all_resp.end(), resp.begin(), resp.end());
    double rate = n ? 100.0 * det / n : 0.0, fp_rate = ctl ? 100.0 * fp / ctl : 0.0;
    rates.push_back(rate);
    std::optional<SampleSummary> s;
    if (!resp.empty()) s = summarize(resp);
    rows.push_back({std::to_string(no++), fmt("%.0f", dist * 100), fmt("%.1f", rate), fmt("%.1f", fp_rate),
                    s ? fmt("%.1f", s->mean) : "-", s ? ci_text(*s, "%.1f") : "-", std::to_string(n)});
    csv_rows.push_back({g6(dist), std::to_string(n), g6(rate), std::to_string(ctl), g6(fp_rate),
                        s ? g6(s->mean) : "", s ? g6(s->std) : "", s ? g6(s->ci_low) : "", s ? g6(s->ci_high) : ""});
  }
  double all_rate = all_n ? 100.0 * all_det / all_n : 0.0, all_fp_rate = all_ctl ? 100.0 * all_fp / all_ctl : 0.0;
  std::optional<SampleSummary> s_all;
  if (!all_resp.empty()) s_all = summarize(all_resp);
  rows.push_back({"", "Overall", fmt("%.1f", all_rate), fmt("%.1f", all_fp_rate), s_all ? fmt("%.1f", s_all->mean) : "-",
                  s_all ? ci_text(*s_all, "%.1f") : "-", std::to_string(all_n)});
  text += text_table({"No.", "Distance (cm)", "Detection (%)", "False pos (%)", "Response (ms)", "95% CI (ms)",
                      "Samples"},
                     rows);
  bool monotone = rates.empty() || rates.front() >= rates.back();
  text += std::string("Nearest-distance detection rate >= farthest: ") + (monotone ? "yes" : "no") +
          "\nResponse time runs from the first below-threshold echo to AVOID entry.\n\n";
  out["tables/detection.csv"] = csv({"distance_m", "encounters", "detection_pct", "controls", "false_positive_pct",
                                     "response_ms_mean", "response_ms_std", "ci_low_ms", "ci_high_ms"},
                                    csv_rows);
}

void render_fsm(const StudyData& d, FileSet& out, std::string& text) {
  text += "State machine timing (timeout " + d.meta.get_string("timeout", "?") + " s per metric)\n\n";
  std::vector<std::vector<std::string>> rows, csv_rows;
  int no = 1;
  for (FsmMetric m : kFsmMetrics) {
    std::vector<double> v;
    std::size_t n = 0;
    for (const auto& s : d.timings) {
      if (s.metric != m) continue;
      ++n;
      if (s.success) v.push_back(s.value);
    }
    if (n == 0) continue;
    double success = 100.0 * static_cast<double>(v.size()) / static_cast<double>(n);
    std::optional<SampleSummary> s;
    if (!v.empty()) s = summarize(v);
    std::string name(fsm_metric_name(m));
    rows.push_back({std::to_string(no++), name, s ? fmt("%.3f", s->mean) : "-", s ? fmt("%.3f", s->std) : "-",
                    fmt("%.0f", success), s ? ci_text(*s, "%.3f") : "-", std::to_string(n)});
    csv_rows.push_back({name, std::to_string(n), std::to_string(v.size()), g6(success), s ? g6(s->mean) : "",
                        s ? g6(s->std) : "", s ? g6(s->ci_low) : "", s ? g6(s->ci_high) : ""});
  }
  text += text_table({"No.", "Metric", "Mean (s)", "Std dev (s)", "Success (%)", "95% CI (s)", "Trials"}, rows);
  text += "\n";
  out["tables/fsm_timing.csv"] =
      csv({"metric", "trials", "successes", "success_pct", "mean_s", "std_s", "ci_low_s", "ci_high_s"}, csv_rows);
}

void render_power(const StudyData& d, FileSet& out, std::string& text) {
  const PowerTable& p = *d.power;
  const double current = weighted_current(p);
  const double derating = d.meta.get_double("derating", 1.0);
  const double runtime = estimate_runtime(p.battery_capacity_mah, current, derating);
  text += "Power consumption across operating modes\n\n";
  std::vector<std::vector<std::string>> rows, csv_rows;
  int no = 1;
  for (const auto& r : p.rows) {
    double w = r.current_ma * r.duty_pct / 100.0;
    rows.push_back({std::to_string(no++), r.mode, fmt("%.1f", r.current_ma), fmt("%.2f", r.duty_pct), fmt("%.2f", w)});
    csv_rows.push_back({r.mode, g6(r.current_ma), g6(r.duty_pct), g6(w)});
  }
  rows.push_back({"", "Weighted average", "", "", fmt("%.1f", current)});
  text += text_table({"No.", "Operating mode", "Current (mA)", "Duty (%)", "Weighted (mA)"}, rows);
  text += "Runtime on " + fmt("%.0f", p.battery_capacity_mah) + " mAh (derating " + fmt("%.2f", derating) +
          "): " + fmt("%.2f", runtime) + " h\n";
  text += "Note: the published bench figures are 412 mA and 5.2 h. The rows above sum to " + fmt("%.1f", current) +
          " mA, and " + fmt("%.0f", p.battery_capacity_mah) + " mAh / 412 mA would give " +
          fmt("%.2f", p.battery_capacity_mah / 412.0) +
          " h, so neither published figure follows from the table. Exact arithmetic is reported here.\n\n";
  out["tables/power.csv"] = csv({"mode", "current_ma", "duty_pct", "weighted_ma"}, csv_rows);
  out["tables/power_summary.csv"] =
      csv({"weighted_ma", "capacity_mah", "derating", "runtime_h", "published_ma", "published_h"},
          {{g6(current), g6(p.battery_capacity_mah), g6(derating), g6(runtime), "412", "5.2"}});
}

void render_soak(const StudyData& d, FileSet& out, std::string& text) {
  const SoakResult& s = *d.soak;
  const std::string rerun = d.meta.get_string("rerun_digest", "");
  const bool identical = !rerun.empty() && rerun == hex16(s.digest);
  text += "Continuous soak\n\n";
  std::vector<std::vector<std::string>> rows{
      {"Ticks", std::to_string(s.ticks) + " of " + std::to_string(s.ticks_requested)},
      {"Simulated time (s)", fmt("%.1f", static_cast<double>(s.ticks) * d.meta.get_double("t_s", 0.05))},
      {"Completed", s.completed ? "yes" : "no"},
      {"Invariant violations", std::to_string(s.violations)},
      {"First violation", s.first_violation.empty() ? "none" : s.first_violation},
      {"Max |integral|", fmt("%.3f", s.max_abs_integral)},
      {"Max lost counter", std::to_string(s.max_lost_counter)},
      {"Mode transitions", std::to_string(s.transitions)},
      {"Output digest", hex16(s.digest)},
      {"Rerun digest", rerun.empty() ? "-" : rerun},
      {"Bit-identical rerun", identical ? "yes" : "no"}};
  text += text_table({"Quantity", "Value"}, rows);
  text += "\n";
  std::vector<std::vector<std::string>> csv_rows;
  for (const auto& r : rows) csv_rows.push_back(r);
  out["tables/soak.csv"] = csv({"quantity", "value"}, csv_rows);
}

}  // namespace

FileSet render_report(const StudyData& d) {
  bool empty = true;
  if (d.study == "pid-vs-onoff" || d.study == "speed-sweep") empty = d.trials.empty();
  if (d.study == "detection") empty = d.encounters.empty();
  if (d.study == "fsm-timing") empty = d.timings.empty();
  if (d.study == "power") empty = !d.power;
  if (d.study == "soak") empty = !d.soak;
  if (empty) throw ValidationError("nothing to report");
  FileSet out;
  std::string text = "Study: " + d.study + "\nMaster seed: " + d.meta.get_string("master_seed", "?") +
                     "\nConfig fingerprint: " + d.meta.get_string("fingerprint", "?") + "\n\n";
  if (d.study == "pid-vs-onoff") {
    render_pid_vs_onoff(d, out, text);
  } else if (d.study == "speed-sweep") {
    render_sweep(d, out, text);
  } else if (d.study == "detection") {
    render_detection(d, out, text);
  } else if (d.study == "fsm-timing") {
    render_fsm(d, out, text);
  } else if (d.study == "power") {
    render_power(d, out, text);
  } else if (d.study == "soak") {
    render_soak(d, out, text);
  }
  out["report.txt"] = text;
  return out;
}

void write_files(const std::filesystem::path& dir, const FileSet& files) {
  for (const auto& [rel, bytes] : files) {
    std::filesystem::path p = dir / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + p.string() + "'");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("write failed for '" + p.string() + "'");
  }
}

FileSet read_data_files(const std::filesystem::path& dir) {
  FileSet files;
  std::filesystem::path data = dir / "data";
  if (!std::filesystem::is_directory(data)) throw ValidationError("nothing to report: " + data.string() + " not found");
  for (const auto& entry : std::filesystem::recursive_directory_iterator(data)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream f(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    files[std::filesystem::relative(entry.path(), dir).generic_string()] = ss.str();
  }
  return files;
}

}  // namespace lfl
