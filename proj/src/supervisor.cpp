#include "lfl/supervisor.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lfl/plant.hpp"

namespace lfl {

namespace {

// Tolerance on accumulated tick time when comparing against phase durations.
constexpr double kClockEps = 1e-9;

constexpr std::array<std::string_view, 5> kModeNames{"FOLLOW", "DETECT", "AVOID", "RECOVER", "SEARCH"};

bool below(const std::optional<double>& d, double threshold) { return d && *d < threshold; }

SupervisorState enter(Mode m, const SupervisorConfig& config) {
  SupervisorState s;
  s.mode = m;
  if (m == Mode::kRecover) s.spiral_radius = config.spiral_start_radius;
  return s;
}

double phase_duration(AvoidPhase p, const SupervisorConfig& c) {
  switch (p) {
    case AvoidPhase::kStop:
      return c.stop_duration;
    case AvoidPhase::kReverse:
      return c.reverse_duration;
    case AvoidPhase::kTurn:
      return c.turn_duration;
    case AvoidPhase::kForward:
      break;
  }
  return 0.0;
}

}  // namespace

std::string_view mode_name(Mode m) { return kModeNames[static_cast<std::size_t>(m)]; }

std::optional<Mode> mode_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<Mode>(i);
  }
  return std::nullopt;
}

std::string_view avoid_phase_name(AvoidPhase p) {
  constexpr std::array<std::string_view, 4> names{"STOP", "REVERSE", "TURN", "FORWARD"};
  return names[static_cast<std::size_t>(p)];
}

double spiral_radius(double elapsed, const SupervisorConfig& c) {
  double f = std::clamp(elapsed / c.recover_timeout, 0.0, 1.0);
  return c.spiral_start_radius + f * (c.spiral_end_radius - c.spiral_start_radius);
}

MotorCommand spiral_command(double elapsed, const SupervisorConfig& c) {
  double v = pwm_to_speed(c.spiral_pwm, c.dead_zone);
  double omega = v / spiral_radius(elapsed, c);
  double v_left = v + omega * c.wheel_base / 2.0;
  double v_right = v - omega * c.wheel_base / 2.0;
  return {speed_to_pwm(std::abs(v_left), c.dead_zone), speed_to_pwm(std::abs(v_right), c.dead_zone), v_left < 0.0,
          v_right < 0.0};
}

ActuationDirective directive_for(const SupervisorState& s, const SupervisorConfig& c) {
  switch (s.mode) {
    case Mode::kFollow:
      return {DirectiveKind::kDelegatePid, {}};
    case Mode::kDetect:
      return {DirectiveKind::kHoldPid, {}};
    case Mode::kAvoid:
      switch (s.avoid_phase) {
        case AvoidPhase::kStop:
          return {DirectiveKind::kManeuver, {0, 0, false, false}};
        case AvoidPhase::kReverse:
          return {DirectiveKind::kManeuver, {c.reverse_pwm, c.reverse_pwm, true, true}};
        case AvoidPhase::kTurn:
          return {DirectiveKind::kManeuver, {c.turn_pwm_left, c.turn_pwm_right, false, false}};
        case AvoidPhase::kForward:
          return {DirectiveKind::kManeuver, {c.forward_pwm, c.forward_pwm, false, false}};
      }
      break;
    case Mode::kRecover:
      return {DirectiveKind::kManeuver, spiral_command(s.recover_elapsed, c)};
    case Mode::kSearch:
      if (s.search_clockwise) return {DirectiveKind::kManeuver, {c.search_pwm, c.search_pwm, false, true}};
      return {DirectiveKind::kManeuver, {c.search_pwm, c.search_pwm, true, false}};
  }
  return {};
}

SupervisorStep fsm_step(const SupervisorState& state, const SupervisorInputs& in, double dt,
                        const SupervisorConfig& c) {
  SupervisorState next = state;
  std::optional<Transition> tr;
  auto go = [&](Mode to, std::string_view trigger) {
    tr = Transition{state.mode, to, trigger};
    next = enter(to, c);
  };

  switch (state.mode) {
    case Mode::kFollow:
      if (in.debounce_confirmed) {
        go(Mode::kDetect, "debounce_confirmed");
      } else if (in.lost) {
        go(Mode::kSearch, "line_lost");
        next.search_clockwise = in.line_side < 0;
      }
      break;

    case Mode::kDetect:
      if (below(in.distance, c.obstacle_threshold)) {
        next.detect_hits = state.detect_hits + 1;
        if (next.detect_hits >= c.detect_confirmations) go(Mode::kAvoid, "detect_confirmed");
      } else {
        go(Mode::kFollow, "detect_rejected");
      }
      break;

    case Mode::kAvoid:
      if (state.avoid_phase == AvoidPhase::kForward) {
        next.forward_travel = state.forward_travel + pwm_to_speed(c.forward_pwm, c.dead_zone) * dt;
        next.phase_clock = state.phase_clock + dt;
        if (next.forward_travel >= c.forward_distance - kClockEps) {
          if (below(in.distance, c.obstacle_threshold)) {
            // Obstacle still ahead: run the maneuver again from STOP.
            next = enter(Mode::kAvoid, c);
          } else {
            go(Mode::kRecover, "avoid_complete");
          }
        }
      } else {
        next.phase_clock = state.phase_clock + dt;
        if (next.phase_clock >= phase_duration(state.avoid_phase, c) - kClockEps) {
          next.avoid_phase = static_cast<AvoidPhase>(static_cast<int>(state.avoid_phase) + 1);
          next.phase_clock = 0.0;
        }
      }
      break;

    case Mode::kRecover:
      if (in.line_seen) {
        go(Mode::kFollow, "line_seen");
      } else {
        next.recover_elapsed = std::min(state.recover_elapsed + dt, c.recover_timeout);
        next.phase_clock = state.phase_clock + dt;
        next.spiral_radius = spiral_radius(next.recover_elapsed, c);
        if (state.recover_elapsed + dt >= c.recover_timeout - kClockEps) go(Mode::kSearch, "recover_timeout");
      }
      break;

    case Mode::kSearch:
      if (in.line_seen) {
        go(Mode::kFollow, "line_seen");
      } else {
        next.phase_clock = state.phase_clock + dt;
      }
      break;
  }
  return {next, directive_for(next, c), tr};
}

}  // namespace lfl
