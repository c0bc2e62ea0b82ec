// Acceptance checks: one line per criterion, nonzero exit if any fails.
//
//   lfl_acceptance            run all eleven
//   lfl_acceptance 3 7        run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lfl/config.hpp"
#include "lfl/control.hpp"
#include "lfl/lab.hpp"
#include "lfl/report.hpp"
#include "lfl/runtime.hpp"
#include "lfl/sensors.hpp"
#include "lfl/stats.hpp"
#include "lfl/tuning.hpp"

using namespace lfl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string fmtn(const char* f, Args... a) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, a...);
  return buf;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// Per-trial mean |error| for each axis value of a sweep run at the CLI defaults.
std::map<std::string, std::vector<double>> sweep_means(const std::string& axis, std::vector<std::string> values,
                                                       std::size_t trials) {
  Config cfg;
  cfg.set("sim.duration", "60");
  SweepOptions o;
  o.axis = axis;
  o.values = std::move(values);
  o.trials = trials;
  o.master_seed = 42;
  SweepResult r = run_sweep(cfg, o);
  std::map<std::string, std::vector<double>> out;
  for (const auto& rec : r.records) {
    if (!rec.completed) throw SimulationError("trial " + rec.axis_value + "/" + std::to_string(rec.trial) + " did not complete");
    out[rec.axis_value].push_back(rec.error.mean);
  }
  return out;
}

Outcome zn_exact() {
  PidGains g = zn_gains(8.5, 0.4);
  bool ok = g.kp == 5.1 && g.ki == 25.5 && g.kd == 0.255;
  return {ok, fmtn("zn_gains(8.5, 0.4) = (%.17g, %.17g, %.17g)", g.kp, g.ki, g.kd)};
}

Outcome zn_reference() {
  TuningOptions o;
  o.kp_lo = 1.0;
  o.kp_hi = 20.0;
  OscillationReport r = find_critical_gain(reference_plant_loop(), o);
  const double tu = 2.0 * kPi / std::sqrt(2.0);
  const double eku = std::abs(r.ku - 6.0) / 6.0, etu = std::abs(r.tu - tu) / tu;
  return {eku <= 0.05 && etu <= 0.05,
          fmtn("ku %.4f (%.2f%% off 6), tu %.4f s (%.2f%% off %.4f)", r.ku, 100 * eku, r.tu, 100 * etu, tu)};
}

Outcome pid_vs_onoff() {
  auto m = sweep_means("controller.kind", {"onoff", "pid"}, 40);
  const auto& pid = m.at("pid");
  const auto& onoff = m.at("onoff");
  TTestResult t = t_test(onoff, pid);
  const double ratio = mean_of(pid) / mean_of(onoff);
  return {ratio <= 0.65 && t.p_one_tailed < 0.001 && t.cohens_d > 1.0,
          fmtn("PID %.3f cm vs on-off %.3f cm, ratio %.3f, p %.3g (df %.0f), d %.3f", mean_of(pid), mean_of(onoff),
               ratio, t.p_one_tailed, t.df, t.cohens_d)};
}

Outcome speed_monotone() {
  const std::vector<std::string> pwms{"100", "125", "150", "175", "200"};
  auto m = sweep_means("pid.base_pwm", pwms, 20);
  bool ok = true;
  std::string d = "means";
  double prev = -1.0;
  for (const auto& p : pwms) {
    double v = mean_of(m.at(p));
    ok = ok && v > prev;
    prev = v;
    d += fmtn(" %s:%.3f", p.c_str(), v);
  }
  return {ok, d + " cm"};
}

Outcome echo_round_trip() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(0.02, 4.0), temp(-40.0, 60.0);
  double worst = 0.0;
  int missing = 0;
  for (int i = 0; i < 1000; ++i) {
    double d = dist(rng), T = temp(rng);
    auto back = echo_to_distance(2.0 * d / speed_of_sound(T), T);
    if (!back) {
      ++missing;
      continue;
    }
    worst = std::max(worst, std::abs(*back - d) / d);
  }
  return {missing == 0 && worst <= 1e-12, fmtn("1000 pairs, worst relative error %.3g, %d dropped", worst, missing)};
}

Outcome fsm_trace() {
  Config cfg;
  cfg.set("track.name", "straight");
  cfg.set("ir.noise_sigma", "0");
  cfg.set("us.jitter_sigma", "0");
  cfg.set("init.lateral_sigma", "0");
  cfg.set("init.heading_sigma", "0");
  cfg.set("sim.duration", "8");
  ScenarioConfig sc = scenario_from_config(cfg);
  Track track = track_from_config(cfg);
  RobotState start = state_with_reference_at(track.pose_at(0.0), sc.plant.geometry);
  const double mount_x = ultrasonic_mount(start, sc.plant.geometry).position.x;
  track.obstacles.push_back({{mount_x + 0.50 + 0.03, 0.0}, 0.03, {}, {}});
  ScenarioResult r = run_scenario(track, sc);
  const auto& k = r.ticks;

  auto below = [&](std::size_t i) { return k[i].ultrasonic && *k[i].ultrasonic < 0.20; };
  std::size_t third = k.size();
  for (std::size_t i = 2; i < k.size(); ++i) {
    if (below(i) && below(i - 1) && below(i - 2)) {
      third = i;
      break;
    }
  }
  auto first_mode = [&](Mode m) {
    for (std::size_t i = 0; i < k.size(); ++i)
      if (k[i].mode == m) return i;
    return k.size();
  };
  const std::size_t detect = first_mode(Mode::kDetect), avoid = first_mode(Mode::kAvoid);
  if (third == k.size() || detect == k.size() || avoid == k.size()) {
    return {false, "obstacle never confirmed"};
  }
  // Consecutive ticks spent in each fixed phase of the first maneuver.
  std::map<AvoidPhase, int> ticks;
  for (std::size_t i = avoid; i < k.size() && k[i].mode == Mode::kAvoid; ++i) ++ticks[k[i].supervisor.avoid_phase];
  const double ts = sc.controller.gains.t_s;
  const double stop = ticks[AvoidPhase::kStop] * ts, rev = ticks[AvoidPhase::kReverse] * ts,
               turn = ticks[AvoidPhase::kTurn] * ts;
  const double tol = ts + 1e-9;
  bool ok = detect == third && avoid == detect + 2 && below(detect + 1) && below(detect + 2) &&
            std::abs(stop - 1.0) <= tol && std::abs(rev - 0.5) <= tol && std::abs(turn - 1.0) <= tol;
  return {ok, fmtn("DETECT at below-sample #%zu (tick %zu), AVOID %zu ticks later, phases %.2f/%.2f/%.2f s",
                   detect - (third - 2) + 1, detect, avoid - detect, stop, rev, turn)};
}

Outcome detection() {
  Config cfg;
  cfg.set("track.name", "straight");
  DetectionOptions o;
  o.encounters = 25;
  auto recs = detection_study(track_from_config(cfg), scenario_from_config(cfg), o);
  std::map<double, std::pair<int, int>> hits;
  int fp = 0, controls = 0;
  for (const auto& r : recs) {
    if (r.control) {
      ++controls;
      fp += r.detected;
    } else {
      hits[r.distance].first += r.detected;
      hits[r.distance].second += 1;
    }
  }
  auto rate = [&](double d) { return 100.0 * hits[d].first / hits[d].second; };
  const double fpr = 100.0 * fp / controls;
  std::string d;
  for (const auto& [dist, h] : hits) d += fmtn("%.0f cm %.0f%%, ", dist * 100, 100.0 * h.first / h.second);
  return {rate(0.10) >= rate(0.40) && fpr <= 2.0, d + fmtn("false positives %.1f%% of %d", fpr, controls)};
}

Outcome windup_fuzz() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> gain(0.0, 1000.0), unit(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 40), base(0, 255), bit(0, 1);
  std::exponential_distribution<double> heavy(0.2);
  double worst_i = 0.0;
  int worst_lo = 255, worst_hi = 0;
  for (int seq = 0; seq < 1'000'000; ++seq) {
    PidGains g{gain(rng), gain(rng), gain(rng) / 10.0, 0.05};
    PidState s;
    s.v_base = base(rng);
    s.integral = 50.0 * unit(rng);
    const bool bits = seq % 2 == 0;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      MotorCommand c;
      if (bits) {
        ControlOutput o = control_tick({bit(rng), bit(rng)}, s, g);
        s = o.state;
        c = o.command;
      } else {
        // Arbitrary real errors, including ones far outside the sensor range.
        double e = unit(rng) * (1.0 + heavy(rng));
        PidOutput o = pid_step(s, g, e);
        s = o.state;
        c = mix_motors(s.v_base, o.u);
      }
      worst_i = std::max(worst_i, std::abs(s.integral));
      worst_lo = std::min({worst_lo, c.pwm_left, c.pwm_right});
      worst_hi = std::max({worst_hi, c.pwm_left, c.pwm_right});
    }
  }
  return {worst_i <= 50.0 && worst_lo >= 0 && worst_hi <= 255,
          fmtn("1e6 sequences, max |integral| %.6g, PWM range [%d, %d]", worst_i, worst_lo, worst_hi)};
}

Outcome power() {
  PowerTable t = default_power_table();
  const double w = weighted_current(t);
  StudyData d;
  d.study = "power";
  d.meta.set("derating", "1");
  d.power = t;
  std::string text = render_report(parse_study_data(study_data_files(d))).at("report.txt");
  const bool annotated = text.find("412 mA") != std::string::npos && text.find("5.2 h") != std::string::npos;
  return {std::abs(w - 407.8) <= 1e-9 && annotated,
          fmtn("weighted current %.10g mA, runtime %.2f h, report %s", w, estimate_runtime(t.battery_capacity_mah, w),
               annotated ? "notes 412 mA / 5.2 h" : "lacks the 412 mA / 5.2 h note")};
}

// One-tailed p of mean(a) > mean(b) by random relabelling.
double permutation_p(const std::vector<double>& a, const std::vector<double>& b, int perms, std::mt19937_64& rng) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  const double total = std::accumulate(all.begin(), all.end(), 0.0);
  const double na = a.size(), nb = b.size();
  const double observed = mean_of(a) - mean_of(b);
  int at_least = 0;
  for (int p = 0; p < perms; ++p) {
    // Partial Fisher-Yates: only the first na slots matter.
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    double sa = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += all[i];
    if (sa / na - (total - sa) / nb >= observed - 1e-12) ++at_least;
  }
  return static_cast<double>(at_least) / perms;
}

// At 1e5 relabellings the reference itself has a standard error of up to 1.6e-3,
// close to the 2e-3 tolerance, so the verdict uses a 2e6 reference; the 1e5
// figure is still reported.
Outcome stats_oracle() {
  std::mt19937_64 rng(20250101);
  std::normal_distribution<double> noise(0.0, 1.0);
  double worst = 0.0, worst_small = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    std::vector<double> a(50), b(50);
    // Effects spread so the p-values cover roughly 1e-4 .. 0.4.
    const double shift = 0.17 + 0.025 * pair;
    for (double& x : a) x = shift + noise(rng);
    for (double& x : b) x = noise(rng);
    const double p = t_test(a, b).p_one_tailed;
    worst_small = std::max(worst_small, std::abs(p - permutation_p(a, b, 100'000, rng)));
    worst = std::max(worst, std::abs(p - permutation_p(a, b, 2'000'000, rng)));
  }
  std::vector<double> x(50, 0.0), y(50, 0.0);
  for (int i = 0; i < 50; ++i) {
    x[i] = noise(rng);
    y[i] = noise(rng);
  }
  const double df = t_test(x, y).df;
  return {worst <= 2e-3 && df == 98.0,
          fmtn("20 pairs, worst |p - p_perm| %.2e at 2e6 relabellings (%.2e at 1e5), pooled df for 50+50 = %.0f", worst,
               worst_small, df)};
}

Outcome soak() {
  Config cfg;
  Track track = track_from_config(cfg);
  ScenarioConfig sc = scenario_from_config(cfg);
  SoakResult first, second;
  parallel_for(2, 2, [&](std::size_t i) { (i == 0 ? first : second) = run_soak(track, sc, 1'000'000); });
  bool ok = first.completed && second.completed && first.violations == 0 && second.violations == 0 &&
            first.digest == second.digest && first.ticks == 1'000'000;
  std::string d = fmtn("%zu ticks, %zu violations, digests %016llx / %016llx", first.ticks, first.violations,
                       static_cast<unsigned long long>(first.digest), static_cast<unsigned long long>(second.digest));
  if (!first.first_violation.empty()) d += ", first: " + first.first_violation;
  return {ok, d};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "ZN gain table exactness", zn_exact},
      {2, "ZN identification on the reference plant", zn_reference},
      {3, "PID beats on-off on the curved track", pid_vs_onoff},
      {4, "error grows strictly with speed", speed_monotone},
      {5, "echo distance round trip", echo_round_trip},
      {6, "debounce and state machine trace", fsm_trace},
      {7, "detection degrades with distance", detection},
      {8, "anti-windup and PWM clipping fuzz", windup_fuzz},
      {9, "power arithmetic", power},
      {10, "t-test p-values against permutation", stats_oracle},
      {11, "determinism soak", soak},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
