#include "lfl/runtime.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>
#include <vector>

#include "lfl/error.hpp"

namespace lfl {

namespace {

class CollectingSink : public TickSink {
 public:
  explicit CollectingSink(ScenarioResult& r) : result_(r) {}
  void on_tick(const TickLog& tick) override { result_.ticks.push_back(tick); }
  void on_transition(const TransitionEvent& e) override { result_.transitions.push_back(e); }

 private:
  ScenarioResult& result_;
};

int signed_pwm(int pwm, bool reverse) { return reverse ? -pwm : pwm; }

MotorCommand swap_channels(const MotorCommand& c) {
  return {c.pwm_right, c.pwm_left, c.reverse_right, c.reverse_left};
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::size_t tick_count(double duration, double t_s) {
  return static_cast<std::size_t>(std::llround(std::floor(duration / t_s + 1e-9)));
}

CalibrationRecord calibrate_ir(const IrSensorModel& model, double reflect_surface, double reflect_line,
                               RandomStream& rng, std::size_t samples) {
  std::vector<int> white(samples), black(samples);
  for (auto& w : white) w = read_ir(model, reflect_surface, rng);
  for (auto& b : black) b = read_ir(model, reflect_line, rng);
  return calibrate_threshold(white, black);
}

ScenarioSummary run_scenario(const Track& track, const ScenarioConfig& cfg, TickSink& sink) {
  if (!(cfg.duration > 0.0)) throw ConfigError("duration: must be positive");
  const double ts = cfg.controller.gains.t_s;
  if (!(ts > 0.0)) throw ConfigError("pid.t_s: must be positive");
  const auto substeps = static_cast<int>(std::llround(ts / cfg.physics_step));
  if (substeps < 1 || std::abs(substeps * cfg.physics_step - ts) > 1e-12) {
    throw ConfigError("sim.physics_step: must divide the control period");
  }
  const double h = ts / substeps;
  const RobotGeometry& geom = cfg.plant.geometry;

  RandomStream ir_left_rng(cfg.seed, "ir_left");
  RandomStream ir_right_rng(cfg.seed, "ir_right");
  RandomStream us_rng(cfg.seed, "us");
  RandomStream init_rng(cfg.seed, "init");

  ScenarioSummary summary;
  summary.threshold_left = cfg.threshold_left.value_or(0);
  summary.threshold_right = cfg.threshold_right.value_or(0);
  if (!cfg.threshold_left || !cfg.threshold_right) {
    RandomStream calib_rng(cfg.seed, "calibration");
    if (!cfg.threshold_left) {
      summary.threshold_left = calibrate_ir(cfg.ir, track.reflect_surface, track.reflect_line, calib_rng).v_threshold;
    }
    if (!cfg.threshold_right) {
      summary.threshold_right =
          calibrate_ir(cfg.ir, track.reflect_surface, track.reflect_line, calib_rng).v_threshold;
    }
  }

  const InitialPlacement& pl = cfg.placement;
  Pose ref = track.pose_at(pl.start_arc_length);
  double lateral = pl.lateral_offset + init_rng.gaussian(pl.lateral_sigma);
  double heading = pl.heading_offset + init_rng.gaussian(pl.heading_sigma);
  ref.position = ref.position + Vec2{-std::sin(ref.heading), std::cos(ref.heading)} * lateral;
  ref.heading = wrap_angle(ref.heading + heading);
  RobotState robot = state_with_reference_at(ref, geom);
  robot.v_left = robot.v_right = pl.initial_speed;

  PidState pid;
  pid.v_base = cfg.controller.base_pwm;
  SupervisorState sup;
  DebounceState debounce;
  debounce.threshold_distance = cfg.supervisor.obstacle_threshold;
  MedianFilter filter_left, filter_right;
  double last_error = 0.0, last_u = 0.0;
  int line_side = 0;

  const std::size_t n = tick_count(cfg.duration, ts);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * ts;
    TickLog log;
    log.t = t;
    log.pose = robot.pose;

    auto lat = lateral_error_cm(track, robot, geom);
    if (!lat) {
      summary.status = ScenarioStatus::kOffTrack;
      summary.off_track_time = t;
      break;
    }
    log.lateral_error_cm = *lat;

    SensorPoints pts = ir_sensor_points(robot, geom);
    const double refl_left = reflectance_at(track, pts.left);
    const double refl_right = reflectance_at(track, pts.right);
    for (int i = 0; i < cfg.ir.samples_per_tick; ++i) {
      log.raw_left = read_ir(cfg.ir, refl_left, ir_left_rng);
      log.raw_right = read_ir(cfg.ir, refl_right, ir_right_rng);
      log.filtered_left = filter_left.push(log.raw_left);
      log.filtered_right = filter_right.push(log.raw_right);
    }
    log.bit_left = binarize(log.filtered_left, summary.threshold_left);
    log.bit_right = binarize(log.filtered_right, summary.threshold_right);
    log.ultrasonic = measure_distance(cfg.ultrasonic, track, robot, geom, t, us_rng);

    bool confirmed = false;
    if (!cfg.fsm_enabled || sup.mode == Mode::kFollow) {
      std::tie(debounce, confirmed) = debounce_update(debounce, log.ultrasonic);
    } else {
      debounce.consecutive_below = 0;
    }

    const bool tracking = !cfg.fsm_enabled || sup.mode == Mode::kFollow || sup.mode == Mode::kDetect;
    MotorCommand tracking_cmd;
    bool lost = false;
    if (tracking) {
      LineBits bits{log.bit_left, log.bit_right};
      if (cfg.controller.kind == ControllerKind::kPid) {
        ControlOutput out = control_tick(bits, pid, cfg.controller.gains);
        pid = out.state;
        lost = out.lost;
        last_error = out.error;
        last_u = out.u;
        tracking_cmd = cfg.controller.pid_cross_wired ? swap_channels(out.command) : out.command;
      } else {
        ErrorSample e = compute_error(bits.left, bits.right, pid.lost_counter);
        pid.lost_counter = e.lost_counter;
        lost = pid.lost_counter > kLostLimit;
        last_error = e.error;
        last_u = 0.0;
        tracking_cmd = onoff_step(bits.left, bits.right, cfg.controller.base_pwm, cfg.controller.onoff_turn);
      }
    }

    if (tracking && last_error != 0.0) line_side = last_error > 0.0 ? 1 : -1;

    MotorCommand applied = tracking_cmd;
    if (cfg.fsm_enabled) {
      SupervisorInputs in{confirmed, log.ultrasonic, log.bit_left == 1 || log.bit_right == 1, lost, line_side};
      SupervisorStep step = fsm_step(sup, in, ts, cfg.supervisor);
      if (step.transition) {
        TransitionEvent ev{t, step.transition->from, step.transition->to, std::string(step.transition->trigger)};
        sink.on_transition(ev);
        if (step.transition->to == Mode::kFollow &&
            (step.transition->from == Mode::kRecover || step.transition->from == Mode::kSearch)) {
          int base = pid.v_base;
          pid = PidState{};
          pid.v_base = base;
        }
      }
      sup = step.state;
      if (step.directive.kind == DirectiveKind::kManeuver) {
        applied = step.directive.command;
      } else if (!tracking) {
        // Re-entered FOLLOW this tick; the controller takes over next tick.
        applied = MotorCommand{};
      }
    }

    log.mode = sup.mode;
    log.pwm_left = signed_pwm(applied.pwm_left, applied.reverse_left);
    log.pwm_right = signed_pwm(applied.pwm_right, applied.reverse_right);
    log.error = last_error;
    log.integral = pid.integral;
    log.u = last_u;
    log.supervisor = sup;
    log.pid = pid;
    log.debounce = debounce;
    sink.on_tick(log);
    ++summary.ticks;

    for (int i = 0; i < substeps; ++i) robot = step_dynamics(robot, applied, h, cfg.plant);
  }
  summary.final_state = robot;
  return summary;
}

ScenarioResult run_scenario(const Track& track, const ScenarioConfig& config) {
  ScenarioResult r;
  CollectingSink sink(r);
  r.summary = run_scenario(track, config, sink);
  return r;
}

std::string tick_csv_row(const TickLog& k) {
  std::string row;
  row.reserve(160);
  auto add = [&](const std::string& s) {
    if (!row.empty()) row += ',';
    row += s;
  };
  add(fmt6(k.t));
  add(fmt6(k.pose.position.x));
  add(fmt6(k.pose.position.y));
  add(fmt6(k.pose.heading));
  add(fmt6(k.lateral_error_cm));
  add(std::to_string(k.raw_left));
  add(std::to_string(k.raw_right));
  add(std::to_string(k.filtered_left));
  add(std::to_string(k.filtered_right));
  add(std::to_string(k.bit_left));
  add(std::to_string(k.bit_right));
  add(k.ultrasonic ? fmt6(*k.ultrasonic) : std::string("none"));
  add(std::string(mode_name(k.mode)));
  add(std::to_string(k.pwm_left));
  add(std::to_string(k.pwm_right));
  add(fmt6(k.error));
  add(fmt6(k.integral));
  add(fmt6(k.u));
  return row;
}

std::string ticks_to_csv(const std::vector<TickLog>& ticks) {
  std::string out = kTickCsvHeader;
  out += '\n';
  for (const auto& k : ticks) {
    out += tick_csv_row(k);
    out += '\n';
  }
  return out;
}

std::string transitions_to_csv(const std::vector<TransitionEvent>& events) {
  std::ostringstream os;
  os << kTransitionCsvHeader << '\n';
  for (const auto& e : events) {
    os << fmt6(e.t) << ',' << mode_name(e.from) << ',' << mode_name(e.to) << ',' << e.trigger << '\n';
  }
  return os.str();
}

double rmse(const std::vector<TickLog>& ticks, double t0, double t1) {
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& k : ticks) {
    if (k.t < t0 - 1e-12 || k.t > t1 + 1e-12) continue;
    ss += k.lateral_error_cm * k.lateral_error_cm;
    ++n;
  }
  return n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
}

double rmse(const std::vector<TickLog>& ticks) {
  if (ticks.empty()) return 0.0;
  return rmse(ticks, ticks.front().t, ticks.back().t);
}

}  // namespace lfl
