#include "lfl/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "lfl/error.hpp"
#include "lfl/plant.hpp"
#include "lfl/rng.hpp"

namespace lfl {

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ErrorSummary error_summary(std::span<const TickLog> ticks) {
  ErrorSummary s;
  if (ticks.empty()) return s;
  s.min = std::abs(ticks.front().lateral_error_cm);
  double sum = 0.0, sq = 0.0;
  for (const auto& k : ticks) {
    double a = std::abs(k.lateral_error_cm);
    sum += a;
    sq += a * a;
    s.min = std::min(s.min, a);
    s.max = std::max(s.max, a);
  }
  const double n = static_cast<double>(ticks.size());
  s.mean = sum / n;
  s.rmse = std::sqrt(sq / n);
  double var = 0.0;
  for (const auto& k : ticks) var += (std::abs(k.lateral_error_cm) - s.mean) * (std::abs(k.lateral_error_cm) - s.mean);
  s.std = std::sqrt(var / n);
  return s;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::string_view label, std::size_t index) {
  std::string key(label);
  key += '#';
  key += std::to_string(index);
  return substream_seed(master_seed, key) & 0x7fffffffffffffffULL;
}

SweepResult run_sweep(const Config& base, const SweepOptions& opt) {
  if (opt.values.empty()) throw ValidationError("run_sweep: no axis values");
  if (opt.trials == 0) throw ValidationError("run_sweep: trials must be positive");
  if (opt.axis.empty()) throw ValidationError("run_sweep: empty axis name");

  // Tracks are parsed once per axis value.
  std::vector<Config> configs;
  std::vector<Track> tracks;
  for (const auto& v : opt.values) {
    Config c = base;
    c.set(opt.axis, v);
    check_known_keys(c);
    tracks.push_back(track_from_config(c));
    configs.push_back(std::move(c));
  }

  const std::size_t total = opt.values.size() * opt.trials;
  SweepResult result;
  result.records.resize(total);
  std::vector<std::vector<TickLog>> first(opt.keep_first_trace ? opt.values.size() : 0);

  parallel_for(total, opt.jobs, [&](std::size_t i) {
    const std::size_t vi = i / opt.trials, ti = i % opt.trials;
    Config c = configs[vi];
    const std::uint64_t seed = trial_seed(opt.master_seed, opt.axis + "=" + opt.values[vi], ti);
    c.set("seed", std::to_string(seed));
    ScenarioConfig sc = scenario_from_config(c);
    ScenarioResult run = run_scenario(tracks[vi], sc);

    TrialRecord& r = result.records[i];
    r.axis_value = opt.values[vi];
    r.trial = ti;
    r.seed = seed;
    r.fingerprint = resolved_config(c).fingerprint();
    r.error = error_summary(run.ticks);
    r.completed = run.summary.status == ScenarioStatus::kCompleted;
    r.transitions = run.transitions.size();
    r.detections = static_cast<std::size_t>(std::count_if(
        run.transitions.begin(), run.transitions.end(), [](const TransitionEvent& e) { return e.to == Mode::kDetect; }));
    r.events = std::move(run.transitions);
    if (opt.keep_first_trace && ti == 0) first[vi] = std::move(run.ticks);
  });

  for (std::size_t vi = 0; vi < first.size(); ++vi) {
    TraceSeries s;
    s.label = opt.values[vi];
    for (const auto& k : first[vi]) {
      s.t.push_back(k.t);
      s.error_cm.push_back(k.lateral_error_cm);
    }
    result.traces.push_back(std::move(s));
  }
  return result;
}

std::vector<std::pair<std::string, std::vector<const TrialRecord*>>> group_by_value(
    const std::vector<TrialRecord>& records) {
  std::vector<std::pair<std::string, std::vector<const TrialRecord*>>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == r.axis_value; });
    if (it == groups.end()) {
      groups.push_back({r.axis_value, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(&r);
  }
  return groups;
}

namespace {

// Obstacle centered on the path, its near surface `distance` ahead of the
// ultrasonic mount of a robot placed at the nominal start pose.
Obstacle obstacle_ahead(const Track& track, const ScenarioConfig& cfg, double distance, double radius) {
  Pose ref = track.pose_at(cfg.placement.start_arc_length);
  RobotState s = state_with_reference_at(ref, cfg.plant.geometry);
  Pose mount = ultrasonic_mount(s, cfg.plant.geometry);
  PathProjection p = track.project(mount.position);
  double arc = p.arc_length + distance + radius;
  if (arc > track.length() && !track.closed()) throw ValidationError("obstacle lies beyond the end of the track");
  Obstacle o;
  o.center = track.point_at(std::fmod(arc, track.length()));
  o.radius = radius;
  return o;
}

std::optional<double> first_entry(const std::vector<TransitionEvent>& events, Mode to, double after = -1.0) {
  for (const auto& e : events) {
    if (e.to == to && e.t > after) return e.t;
  }
  return std::nullopt;
}

}  // namespace

std::vector<EncounterRecord> detection_study(const Track& track, const ScenarioConfig& base,
                                             const DetectionOptions& opt) {
  if (opt.encounters == 0 || opt.distances.empty()) throw ValidationError("detection_study: nothing to run");
  Track bare = track;
  bare.obstacles.clear();

  const std::size_t per_distance = 2 * opt.encounters;
  std::vector<EncounterRecord> out(opt.distances.size() * per_distance);
  parallel_for(out.size(), opt.jobs, [&](std::size_t i) {
    const std::size_t di = i / per_distance, rest = i % per_distance;
    const bool control = rest >= opt.encounters;
    const std::size_t idx = rest % opt.encounters;
    const double d = opt.distances[di];

    EncounterRecord& r = out[i];
    r.distance = d;
    r.control = control;
    r.index = idx;
    char label[64];
    std::snprintf(label, sizeof(label), "%s/%.17g", control ? "control" : "encounter", d);
    r.seed = trial_seed(opt.master_seed, label, idx);

    ScenarioConfig cfg = base;
    cfg.seed = r.seed;
    cfg.duration = opt.timeout;
    cfg.fsm_enabled = true;

    if (control) {
      ScenarioResult run = run_scenario(bare, cfg);
      r.detected = first_entry(run.transitions, Mode::kDetect).has_value();
      return;
    }

    Track scene = bare;
    Obstacle o = obstacle_ahead(bare, cfg, d, opt.obstacle_radius);
    scene.obstacles.push_back(o);
    ScenarioResult run = run_scenario(scene, cfg);

    // Closest approach: first tick of minimum mount-to-surface distance.
    double best = 1e300, t_close = opt.timeout;
    for (const auto& k : run.ticks) {
      RobotState s;
      s.pose = k.pose;
      double gap = norm(ultrasonic_mount(s, cfg.plant.geometry).position - o.center) - o.radius;
      if (gap < best - 1e-12) {
        best = gap;
        t_close = k.t;
      }
    }
    auto t_detect = first_entry(run.transitions, Mode::kDetect);
    r.detected = t_detect && *t_detect <= t_close + 1e-9;
    if (!r.detected) return;

    std::optional<double> t_first;
    for (const auto& k : run.ticks) {
      if (k.ultrasonic && *k.ultrasonic < cfg.supervisor.obstacle_threshold) {
        t_first = k.t;
        break;
      }
    }
    auto t_avoid = first_entry(run.transitions, Mode::kAvoid, *t_detect - 1e-9);
    if (t_first && t_avoid) r.response_ms = (*t_avoid - *t_first) * 1000.0;
  });
  return out;
}

std::string_view fsm_metric_name(FsmMetric m) {
  switch (m) {
    case FsmMetric::kDetectToAvoid: return "detect_to_avoid";
    case FsmMetric::kAvoidCompletion: return "avoid_completion";
    case FsmMetric::kLineReacquisition: return "line_reacquisition";
    case FsmMetric::kRecoveryFromLoss: return "recovery_from_loss";
  }
  return "detect_to_avoid";
}

std::optional<FsmMetric> fsm_metric_from_name(std::string_view name) {
  for (FsmMetric m : kFsmMetrics) {
    if (fsm_metric_name(m) == name) return m;
  }
  return std::nullopt;
}

std::vector<TimingSample> encounter_timings(const std::vector<TransitionEvent>& events, double timeout) {
  TimingSample detect{FsmMetric::kDetectToAvoid}, avoid{FsmMetric::kAvoidCompletion},
      reacquire{FsmMetric::kLineReacquisition};

  auto avoid_it = std::find_if(events.begin(), events.end(),
                               [](const TransitionEvent& e) { return e.from == Mode::kDetect && e.to == Mode::kAvoid; });
  if (avoid_it != events.end()) {
    const double t_avoid = avoid_it->t;
    double t_detect = t_avoid;
    for (auto it = events.begin(); it != avoid_it; ++it) {
      if (it->to == Mode::kDetect) t_detect = it->t;
    }
    detect.value = t_avoid - t_detect;
    detect.success = detect.value <= timeout;

    auto exit_it = std::find_if(avoid_it + 1, events.end(), [](const TransitionEvent& e) { return e.from == Mode::kAvoid; });
    if (exit_it != events.end()) {
      avoid.value = exit_it->t - t_avoid;
      avoid.success = avoid.value <= timeout;
      if (exit_it->to == Mode::kRecover) {
        auto follow = first_entry(events, Mode::kFollow, exit_it->t);
        if (follow) {
          reacquire.value = *follow - exit_it->t;
          reacquire.success = reacquire.value <= timeout;
        }
      }
    }
  }
  return {detect, avoid, reacquire};
}

TimingSample loss_timing(const std::vector<TransitionEvent>& events, double timeout) {
  TimingSample s{FsmMetric::kRecoveryFromLoss};
  auto search = first_entry(events, Mode::kSearch);
  if (!search) return s;
  auto follow = first_entry(events, Mode::kFollow, *search);
  if (!follow) return s;
  s.value = *follow - *search;
  s.success = s.value <= timeout;
  return s;
}

std::vector<TimingSample> fsm_timing_study(const Track& track, const ScenarioConfig& base,
                                           const FsmTimingOptions& opt) {
  if (opt.encounters == 0) throw ValidationError("fsm_timing_study: nothing to run");
  Track bare = track;
  bare.obstacles.clear();
  Track scene = bare;
  scene.obstacles.push_back(obstacle_ahead(bare, base, opt.obstacle_distance, opt.obstacle_radius));

  std::vector<std::vector<TimingSample>> per_run(2 * opt.encounters);
  parallel_for(per_run.size(), opt.jobs, [&](std::size_t i) {
    const bool loss = i >= opt.encounters;
    const std::size_t idx = i % opt.encounters;
    ScenarioConfig cfg = base;
    cfg.fsm_enabled = true;
    cfg.seed = trial_seed(opt.master_seed, loss ? "loss" : "fsm", idx);
    if (loss) {
      cfg.placement.lateral_offset = opt.loss_offset;
      cfg.duration = 2.0 + opt.timeout;
      ScenarioResult run = run_scenario(bare, cfg);
      TimingSample s = loss_timing(run.transitions, opt.timeout);
      s.index = idx;
      s.seed = cfg.seed;
      per_run[i] = {s};
    } else {
      // Room for detection plus a full timeout on each of the three phases.
      cfg.duration = 2.0 + 3.0 * opt.timeout;
      ScenarioResult run = run_scenario(scene, cfg);
      per_run[i] = encounter_timings(run.transitions, opt.timeout);
      for (auto& s : per_run[i]) {
        s.index = idx;
        s.seed = cfg.seed;
      }
    }
  });

  // Ordered by metric, then encounter index.
  std::vector<TimingSample> out;
  for (FsmMetric m : kFsmMetrics) {
    for (const auto& run : per_run) {
      for (const auto& s : run) {
        if (s.metric == m) out.push_back(s);
      }
    }
  }
  return out;
}

PowerTable default_power_table() {
  PowerTable t;
  t.rows = {{"Following (straight)", 380, 60},
            {"Following (curves)", 450, 25},
            {"Obstacle avoidance", 520, 8},
            {"Search/rotation", 480, 5},
            {"Idle", 85, 2}};
  t.battery_capacity_mah = 2200;
  return t;
}

void validate_power_table(const PowerTable& table) {
  if (table.rows.empty()) throw ValidationError("power table: no rows");
  double duty = 0.0;
  for (const auto& r : table.rows) {
    if (!(r.current_ma >= 0)) throw ValidationError("power table: negative current for '" + r.mode + "'");
    if (!(r.duty_pct >= 0)) throw ValidationError("power table: negative duty for '" + r.mode + "'");
    duty += r.duty_pct;
  }
  if (std::abs(duty - 100.0) > 0.01) {
    throw ValidationError("power table: duty percentages sum to " + std::to_string(duty) + ", not 100");
  }
  if (!(table.battery_capacity_mah > 0)) throw ValidationError("power table: capacity must be positive");
}

double weighted_current(const PowerTable& table) {
  validate_power_table(table);
  // Summing current x duty before the single division keeps integer-valued
  // tables exact.
  double sum = 0.0;
  for (const auto& r : table.rows) sum += r.current_ma * r.duty_pct;
  return sum / 100.0;
}

double estimate_runtime(double capacity_mah, double current_ma, double derating) {
  if (!(current_ma > 0)) throw ValidationError("estimate_runtime: current must be positive");
  if (!(capacity_mah >= 0)) throw ValidationError("estimate_runtime: capacity must be non-negative");
  if (!(derating > 0 && derating <= 1)) throw ValidationError("estimate_runtime: derating must lie in (0, 1]");
  return capacity_mah * derating / current_ma;
}

namespace {

class SoakSink : public TickSink {
 public:
  SoakSink(SoakResult& r, const ScenarioConfig& cfg) : r_(r), cfg_(cfg) {}

  void on_tick(const TickLog& k) override {
    ++r_.ticks;
    fold(tick_csv_row(k));
    check(std::isfinite(k.lateral_error_cm), "non-finite lateral error");
    check(std::abs(k.integral) <= 50.0, "integral outside [-50, 50]");
    check(std::abs(k.pwm_left) <= 255 && std::abs(k.pwm_right) <= 255, "PWM outside [0, 255]");
    check(k.filtered_left >= 0 && k.filtered_left <= 1023 && k.filtered_right >= 0 && k.filtered_right <= 1023,
          "filtered reading outside [0, 1023]");
    check((k.bit_left | k.bit_right) <= 1 && k.bit_left >= 0 && k.bit_right >= 0, "line bit not 0/1");
    check(k.supervisor.detect_hits <= cfg_.supervisor.detect_confirmations, "detect hits above the confirmation count");
    check(k.supervisor.recover_elapsed <= cfg_.supervisor.recover_timeout + 1e-9, "recover clock past its timeout");
    check(k.debounce.consecutive_below <= k.debounce.required, "debounce counter past its requirement");
    check(k.supervisor.mode != Mode::kAvoid || k.supervisor.phase_clock <= 60.0, "avoid phase clock runaway");
    // The counter only advances while tracking; FOLLOW hands over to SEARCH at 11.
    check(k.pid.lost_counter <= 1000, "lost-line counter growing without bound");
    r_.max_abs_integral = std::max(r_.max_abs_integral, std::abs(k.integral));
    r_.max_lost_counter = std::max(r_.max_lost_counter, k.pid.lost_counter);
  }

  void on_transition(const TransitionEvent& e) override {
    ++r_.transitions;
    fold(transitions_to_csv({e}));
  }

 private:
  void fold(const std::string& bytes) { r_.digest = fnv1a64(bytes, r_.digest); }

  void check(bool ok, const char* what) {
    if (ok) return;
    if (r_.violations++ == 0) r_.first_violation = "tick " + std::to_string(r_.ticks - 1) + ": " + what;
  }

  SoakResult& r_;
  const ScenarioConfig& cfg_;
};

}  // namespace

SoakResult run_soak(const Track& track, const ScenarioConfig& base, std::size_t ticks) {
  if (ticks == 0) throw ValidationError("run_soak: tick count must be positive");
  ScenarioConfig cfg = base;
  cfg.fsm_enabled = true;
  cfg.duration = static_cast<double>(ticks) * cfg.controller.gains.t_s;
  SoakResult r;
  r.ticks_requested = ticks;
  r.digest = fnv1a64("");
  SoakSink sink(r, cfg);
  ScenarioSummary s = run_scenario(track, cfg, sink);
  r.completed = s.status == ScenarioStatus::kCompleted && r.ticks == ticks;
  if (!r.completed && r.violations++ == 0) {
    r.first_violation = "run ended after " + std::to_string(r.ticks) + " of " + std::to_string(ticks) + " ticks";
  }
  return r;
}

}  // namespace lfl
