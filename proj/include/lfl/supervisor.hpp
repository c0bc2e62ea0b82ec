#pragma once

#include <optional>
#include <string_view>

#include "lfl/motor.hpp"

namespace lfl {

enum class Mode { kFollow, kDetect, kAvoid, kRecover, kSearch };
enum class AvoidPhase { kStop, kReverse, kTurn, kForward };

std::string_view mode_name(Mode m);
std::optional<Mode> mode_from_name(std::string_view name);
std::string_view avoid_phase_name(AvoidPhase p);

struct SupervisorConfig {
  double obstacle_threshold = 0.20;  // m
  int detect_confirmations = 2;
  double stop_duration = 1.0;     // s
  double reverse_duration = 0.5;  // s
  double turn_duration = 1.0;     // s
  double forward_distance = 0.10; // m of odometric advance
  int reverse_pwm = 120;
  int turn_pwm_left = 100;
  int turn_pwm_right = 177;
  int forward_pwm = 150;
  int spiral_pwm = 120;
  double spiral_start_radius = 0.05;  // m
  double spiral_end_radius = 0.30;    // m
  double recover_timeout = 5.0;       // s
  int search_pwm = 100;
  double wheel_base = 0.14;  // m, for spiral wheel-speed split
  int dead_zone = 30;
};

struct SupervisorState {
  Mode mode = Mode::kFollow;
  double phase_clock = 0.0;
  AvoidPhase avoid_phase = AvoidPhase::kStop;
  int detect_hits = 0;
  double recover_elapsed = 0.0;
  double spiral_radius = 0.0;
  double forward_travel = 0.0;  // odometric advance within the FORWARD phase, m
  bool search_clockwise = false;

  bool operator==(const SupervisorState&) const = default;
};

struct SupervisorInputs {
  bool debounce_confirmed = false;
  std::optional<double> distance;
  bool line_seen = false;
  bool lost = false;
  // Side the line was last seen on while tracking: +1 left, -1 right, 0 unknown.
  // A line lost to the right starts a clockwise SEARCH rotation.
  int line_side = 0;
};

enum class DirectiveKind {
  kDelegatePid,  // FOLLOW
  kHoldPid,      // DETECT: keep tracking while the obstacle is confirmed
  kManeuver,     // AVOID phases, RECOVER spiral, SEARCH rotation
};

struct ActuationDirective {
  DirectiveKind kind = DirectiveKind::kDelegatePid;
  MotorCommand command;  // meaningful for kManeuver only
};

struct Transition {
  Mode from;
  Mode to;
  std::string_view trigger;
};

struct SupervisorStep {
  SupervisorState state;
  ActuationDirective directive;
  std::optional<Transition> transition;
};

// Directive for a state as it stands, without advancing it.
ActuationDirective directive_for(const SupervisorState& state, const SupervisorConfig& config);

SupervisorStep fsm_step(const SupervisorState& state, const SupervisorInputs& inputs, double dt,
                        const SupervisorConfig& config);

// Instantaneous turn radius of the recovery spiral after `elapsed` seconds.
double spiral_radius(double elapsed, const SupervisorConfig& config);

// Clockwise spiral at the forward speed of spiral_pwm.
MotorCommand spiral_command(double elapsed, const SupervisorConfig& config);

}  // namespace lfl
