#pragma once

#include <optional>

#include "lfl/geometry.hpp"
#include "lfl/motor.hpp"
#include "lfl/track.hpp"

namespace lfl {

struct RobotGeometry {
  double wheel_base = 0.14;
  double wheel_diameter = 0.065;
  double sensor_forward_offset = 0.12;
  double sensor_lateral_spacing = 0.015;
  double ultrasonic_forward_offset = 0.10;
};

struct PlantConfig {
  RobotGeometry geometry;
  double motor_tau = 0.03;  // s; <= 0 means the wheels reach their target in one step
  int dead_zone = 30;       // PWM below this produces no motion
  double gain_left = 1.0;   // per-motor mismatch factors
  double gain_right = 1.0;
};

struct RobotState {
  Pose pose;          // wheel-axle midpoint
  double v_left = 0;  // wheel surface speeds, m/s
  double v_right = 0;

  bool operator==(const RobotState& o) const {
    return pose.position == o.pose.position && pose.heading == o.pose.heading &&
           v_left == o.v_left && v_right == o.v_right;
  }
};

// Steady-state straight-line speed for a PWM duty, interpolated through the
// measured 100..200 anchors. Throws ValidationError outside [0, 255].
double pwm_to_speed(int pwm, int dead_zone = 30);
// Nearest PWM whose steady-state speed matches `speed` (clamped to [0, 255]).
int speed_to_pwm(double speed, int dead_zone = 30);
double max_wheel_speed(int dead_zone = 30);

// Advances the plant by dt: exact first-order lag on each wheel, then arc-exact
// differential-drive pose integration at the mean wheel speeds over the step.
RobotState step_dynamics(const RobotState& state, const MotorCommand& command, double dt,
                         const PlantConfig& config);

// Pose integration alone, for constant wheel speeds over dt.
Pose integrate_pose(const Pose& pose, double v_left, double v_right, double wheel_base, double dt);

struct SensorPoints {
  Vec2 left;
  Vec2 right;
  Pose midpoint;  // reference point for lateral error, heading of the robot
};

SensorPoints ir_sensor_points(const RobotState& state, const RobotGeometry& geometry);
Pose ultrasonic_mount(const RobotState& state, const RobotGeometry& geometry);

// Robot state whose IR sensor midpoint sits at `reference` with the same heading.
RobotState state_with_reference_at(const Pose& reference, const RobotGeometry& geometry);

std::optional<double> lateral_error_cm(const Track& track, const RobotState& state,
                                       const RobotGeometry& geometry);

}  // namespace lfl
