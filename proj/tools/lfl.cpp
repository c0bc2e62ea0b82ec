// lfl: simulate, calibrate, tune and run studies on the line-following robot model.
//
//   lfl sim --set controller.kind=onoff --out runs
//   lfl tune --kp-range 1:100
//   lfl experiment speed-sweep --trials 4 --seed 7
//   lfl report runs/speed-sweep

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lfl/config.hpp"
#include "lfl/error.hpp"
#include "lfl/lab.hpp"
#include "lfl/plant.hpp"
#include "lfl/report.hpp"
#include "lfl/runtime.hpp"
#include "lfl/tuning.hpp"

namespace fs = std::filesystem;
using namespace lfl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFailed = 3;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 0;
  std::optional<std::size_t> trials;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "Flat key = value config file");
  sub->add_option("--set", c.overrides, "Override one key (key=value), repeatable; applied after --config");
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--out", c.out, "Output directory (default: $LFL_OUT or ./out)");
  sub->add_option("--jobs", c.jobs, "Parallel trials (default: all cores)");
  sub->add_option("--trials", c.trials, "Trials or encounters per setting");
}

Config load_config(const Common& c) {
  Config cfg = c.config_path.empty() ? Config{} : Config::load_file(c.config_path);
  for (const auto& o : c.overrides) cfg.apply_override(o);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  check_known_keys(cfg);
  return cfg;
}

fs::path out_root(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("LFL_OUT"); env && *env) return env;
  return "out";
}

void write_resolved(const fs::path& dir, const Config& cfg) {
  write_files(dir, {{"resolved_config", resolved_config(cfg).serialize()}});
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---- sim ----------------------------------------------------------------

int cmd_sim(const Common& c) {
  Config cfg = load_config(c);
  Track track = track_from_config(cfg);
  ScenarioConfig sc = scenario_from_config(cfg);
  ScenarioResult r = run_scenario(track, sc);
  fs::path dir = out_root(c) / "sim";
  write_files(dir, {{"ticks.csv", ticks_to_csv(r.ticks)}, {"transitions.csv", transitions_to_csv(r.transitions)}});
  write_resolved(dir, cfg);
  ErrorSummary e = error_summary(r.ticks);
  std::cout << "ticks " << r.summary.ticks << ", mean |error| " << fmt("%.3f", e.mean) << " cm, rmse "
            << fmt("%.3f", e.rmse) << " cm, transitions " << r.transitions.size() << "\n";
  std::cout << "wrote " << (dir / "ticks.csv").string() << "\n";
  if (r.summary.status == ScenarioStatus::kOffTrack) {
    std::cerr << "robot left the track at t = " << fmt("%.2f", *r.summary.off_track_time) << " s\n";
    return kExitFailed;
  }
  return kExitOk;
}

// ---- calibrate ----------------------------------------------------------

int cmd_calibrate(const Common& c) {
  Config cfg = load_config(c);
  Track track = track_from_config(cfg);
  ScenarioConfig sc = scenario_from_config(cfg);
  RandomStream rng(sc.seed, "calibration");
  CalibrationRecord left = calibrate_ir(sc.ir, track.reflect_surface, track.reflect_line, rng);
  CalibrationRecord right = calibrate_ir(sc.ir, track.reflect_surface, track.reflect_line, rng);

  // Consistency: 50 readings with the sensor held over the line.
  RandomStream hold(sc.seed, "consistency");
  std::vector<int> samples(kMinCalibrationSamples);
  for (int& s : samples) s = read_ir(sc.ir, track.reflect_line, hold);
  ConsistencyVerdict v = verify_consistency(samples);

  std::string text;
  for (auto [name, rec] : {std::pair{"left", left}, std::pair{"right", right}}) {
    text += std::string(name) + ": white mean " + fmt("%.2f", rec.v_white_mean) + ", black mean " +
            fmt("%.2f", rec.v_black_mean) + ", V_th " + std::to_string(rec.v_threshold) + ", pooled std " +
            fmt("%.2f", rec.sample_std) + ", samples " + std::to_string(rec.sample_count) + "\n";
  }
  text += "consistency over the line: std " + fmt("%.2f", v.std_dev) + " LSB (limit < " +
          fmt("%.0f", kConsistencyLimit) + "): " + (v.pass ? "pass" : "fail") + "\n";
  std::cout << text;

  std::string snippet = "# white/black means: left " + fmt("%.2f", left.v_white_mean) + "/" +
                        fmt("%.2f", left.v_black_mean) + ", right " + fmt("%.2f", right.v_white_mean) + "/" +
                        fmt("%.2f", right.v_black_mean) + "; consistency std " + fmt("%.2f", v.std_dev) + "\n" +
                        "ir.threshold_left = " + std::to_string(left.v_threshold) + "\n" +
                        "ir.threshold_right = " + std::to_string(right.v_threshold) + "\n";
  fs::path dir = out_root(c) / "calibrate";
  write_files(dir, {{"calibration.txt", text}, {"calibration.conf", snippet}});
  write_resolved(dir, cfg);
  return v.pass ? kExitOk : kExitFailed;
}

// ---- tune ---------------------------------------------------------------

std::pair<double, double> parse_range(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("--kp-range: expected lo:hi, got '" + s + "'");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--kp-range: expected lo:hi, got '" + s + "'");
  }
}

std::string probes_csv(const std::vector<TuningProbe>& probes) {
  std::string out = "kp,diverged,classification,peak_ratio,period_s,amplitude,zero_crossings\n";
  for (const auto& p : probes) {
    out += fmt("%.17g", p.kp) + "," + (p.diverged ? "1" : "0") + "," +
           std::string(oscillation_class_name(p.analysis.classification)) + "," + fmt("%.17g", p.analysis.peak_ratio) +
           "," + fmt("%.17g", p.analysis.period) + "," + fmt("%.17g", p.analysis.amplitude) + "," +
           std::to_string(p.analysis.zero_crossings) + "\n";
  }
  return out;
}

int cmd_tune(const Common& c, const std::string& range, const std::string& target, double tolerance) {
  Config cfg = load_config(c);
  auto [lo, hi] = parse_range(range);
  TuningOptions opt;
  opt.kp_lo = lo;
  opt.kp_hi = hi;
  opt.tolerance = tolerance;

  ClosedLoop loop;
  std::string unit;
  if (target == "reference") {
    loop = reference_plant_loop();
    unit = "output units";
  } else {
    if (!cfg.has("track.name") && !cfg.has("track.file")) cfg.set("track.name", "tuning");
    loop = robot_loop(track_from_config(cfg), scenario_from_config(cfg));
    opt.criterion = CriticalCriterion::kOnset;
    unit = "cm";
  }

  fs::path dir = out_root(c) / "tune";
  write_resolved(dir, cfg);
  OscillationReport rep;
  try {
    rep = find_critical_gain(loop, opt);
  } catch (const TuningError& e) {
    write_files(dir, {{"probes.csv", probes_csv(e.probes())}});
    throw;
  }
  PidGains g = zn_gains(rep.ku, rep.tu);

  std::string text = "target " + target + "\nkp range " + fmt("%g", lo) + ":" + fmt("%g", hi) + ", tolerance " +
                     fmt("%g", tolerance) + "\n" + "ku " + fmt("%.4f", rep.ku) + "\ntu " + fmt("%.4f", rep.tu) +
                     " s\namplitude " + fmt("%.4f", rep.amplitude) + " " + unit + "\nclassification at ku " +
                     std::string(oscillation_class_name(rep.classification)) + "\nbisection steps " +
                     std::to_string(rep.iterations) + "\nzn gains kp " + fmt("%.6g", g.kp) + ", ki " +
                     fmt("%.6g", g.ki) + ", kd " + fmt("%.6g", g.kd) + "\n";
  std::string trace = "t,value\n";
  for (std::size_t i = 0; i < rep.critical_trace.size(); ++i) {
    trace += fmt("%.17g", static_cast<double>(i) * opt.classify.dt) + "," + fmt("%.17g", rep.critical_trace[i]) + "\n";
  }
  write_files(dir, {{"tune_report.txt", text}, {"probes.csv", probes_csv(rep.probes)}, {"critical_trace.csv", trace}});
  std::cout << text;
  return kExitOk;
}

// ---- experiment -----------------------------------------------------------

// Applies the study's defaults to cfg before running.
StudyData run_study(const std::string& study, Config& cfg, const Common& c, std::size_t soak_ticks) {
  StudyData d;
  d.study = study;
  const bool sweep = study == "pid-vs-onoff" || study == "speed-sweep";
  const bool straight = study == "detection" || study == "fsm-timing";
  if (sweep && !cfg.has("sim.duration")) cfg.set("sim.duration", "60");
  if (straight && !cfg.has("track.name") && !cfg.has("track.file")) cfg.set("track.name", "straight");

  Config resolved = resolved_config(cfg);
  const std::uint64_t master = static_cast<std::uint64_t>(cfg.get_int("seed", 42));
  d.meta.set("master_seed", std::to_string(master));
  d.meta.set("fingerprint", resolved.fingerprint());
  d.meta.set("track", cfg.get_string("track.file", "").empty() ? resolved.get_string("track.name", "paper")
                                                                : cfg.get_string("track.file", ""));
  ScenarioConfig sc = scenario_from_config(cfg);

  if (sweep) {
    SweepOptions o;
    o.master_seed = master;
    o.jobs = c.jobs;
    if (study == "pid-vs-onoff") {
      o.axis = "controller.kind";
      o.values = {"onoff", "pid"};
      o.trials = c.trials.value_or(40);
      o.keep_first_trace = true;
    } else {
      o.axis = "pid.base_pwm";
      o.values = {"100", "125", "150", "175", "200"};
      o.trials = c.trials.value_or(20);
      for (const auto& v : o.values) {
        d.meta.set("speed." + v, fmt("%.17g", pwm_to_speed(std::stoi(v), sc.plant.dead_zone)));
      }
    }
    d.meta.set("axis", o.axis);
    d.meta.set("trials", std::to_string(o.trials));
    d.meta.set("duration", resolved.get_string("sim.duration", "?"));
    d.meta.set("base_pwm", resolved.get_string("pid.base_pwm", "?"));
    SweepResult r = run_sweep(cfg, o);
    d.trials = std::move(r.records);
    d.traces = std::move(r.traces);
  } else if (study == "detection") {
    DetectionOptions o;
    o.master_seed = master;
    o.jobs = c.jobs;
    o.encounters = c.trials.value_or(25);
    d.meta.set("threshold", fmt("%g", sc.supervisor.obstacle_threshold));
    d.meta.set("timeout", fmt("%g", o.timeout));
    d.encounters = detection_study(track_from_config(cfg), sc, o);
  } else if (study == "fsm-timing") {
    FsmTimingOptions o;
    o.master_seed = master;
    o.jobs = c.jobs;
    o.encounters = c.trials.value_or(50);
    d.meta.set("timeout", fmt("%g", o.timeout));
    d.timings = fsm_timing_study(track_from_config(cfg), sc, o);
  } else if (study == "power") {
    PowerTable p = default_power_table();
    p.battery_capacity_mah = cfg.get_double("power.capacity_mah", p.battery_capacity_mah);
    d.meta.set("derating", fmt("%.17g", cfg.get_double("power.derating", 1.0)));
    validate_power_table(p);
    d.power = p;
  } else if (study == "soak") {
    Track track = track_from_config(cfg);
    // Two independent runs; the second only contributes its digest.
    SoakResult first, second;
    parallel_for(2, c.jobs, [&](std::size_t i) { (i == 0 ? first : second) = run_soak(track, sc, soak_ticks); });
    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(second.digest));
    d.meta.set("rerun_digest", digest);
    d.meta.set("t_s", fmt("%.17g", sc.controller.gains.t_s));
    d.soak = first;
  }
  return d;
}

bool study_failed(const StudyData& d) {
  if (d.soak) return d.soak->violations > 0 || !d.soak->completed;
  return false;
}

int cmd_experiment(const Common& c, const std::string& study, std::size_t soak_ticks) {
  Config cfg = load_config(c);
  StudyData d = run_study(study, cfg, c, soak_ticks);
  fs::path dir = out_root(c) / study;
  // Render from the stored bytes so `report` reproduces this output exactly.
  FileSet data = study_data_files(d);
  FileSet rendered = render_report(parse_study_data(data));
  write_files(dir, data);
  write_files(dir, rendered);
  write_resolved(dir, cfg);
  std::cout << rendered.at("report.txt");
  std::cout << "wrote " << dir.string() << "\n";
  return study_failed(d) ? kExitFailed : kExitOk;
}

// ---- report -------------------------------------------------------------

int cmd_report(const Common& c, const std::string& dir_arg) {
  fs::path dir = dir_arg.empty() ? out_root(c) : fs::path(dir_arg);
  std::vector<fs::path> targets;
  if (fs::is_directory(dir / "data")) {
    targets.push_back(dir);
  } else if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::is_directory(e.path() / "data")) targets.push_back(e.path());
    }
    std::sort(targets.begin(), targets.end());
  }
  if (targets.empty()) throw ValidationError("nothing to report under '" + dir.string() + "'");
  for (const auto& t : targets) {
    FileSet rendered = render_report(parse_study_data(read_data_files(t)));
    write_files(t, rendered);
    std::cout << "rendered " << t.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-following robot simulator and experiment harness"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("sim", "Run one scenario and write its tick log");
  add_common(sim, common);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate IR thresholds over simulated white and black");
  add_common(calibrate, common);

  auto* tune = app.add_subcommand("tune", "Find the ultimate gain and emit Ziegler-Nichols gains");
  add_common(tune, common);
  std::string kp_range = "1:100", target = "robot";
  double tolerance = 0.05;
  tune->add_option("--kp-range", kp_range, "Proportional gain search range lo:hi")->capture_default_str();
  tune->add_option("--target", target, "robot or reference")
      ->check(CLI::IsMember({"robot", "reference"}))
      ->capture_default_str();
  tune->add_option("--tolerance", tolerance, "Bisection stops below this bracket width")->capture_default_str();

  auto* experiment = app.add_subcommand("experiment", "Run a named study and render its report");
  add_common(experiment, common);
  std::string study;
  std::size_t soak_ticks = 1'000'000;
  experiment->add_option("study", study, "pid-vs-onoff | speed-sweep | detection | fsm-timing | power | soak")
      ->required()
      ->check(CLI::IsMember(study_names()));
  experiment->add_option("--ticks", soak_ticks, "Soak length in control ticks")->capture_default_str();

  auto* report = app.add_subcommand("report", "Re-render reports from stored study data");
  add_common(report, common);
  std::string report_dir;
  report->add_option("dir", report_dir, "Study directory, or a directory of study directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*sim) return cmd_sim(common);
    if (*calibrate) return cmd_calibrate(common);
    if (*tune) return cmd_tune(common, kp_range, target, tolerance);
    if (*experiment) return cmd_experiment(common, study, soak_ticks);
    if (*report) return cmd_report(common, report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}
