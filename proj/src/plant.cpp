#include "lfl/plant.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lfl/error.hpp"

namespace lfl {

namespace {

struct Anchor {
  int pwm;
  double speed;
};

constexpr std::array<Anchor, 5> kAnchors{{{100, 0.25}, {125, 0.32}, {150, 0.40}, {175, 0.47}, {200, 0.55}}};

double interpolate(const Anchor& a, const Anchor& b, double pwm) {
  return a.speed + (pwm - a.pwm) * (b.speed - a.speed) / (b.pwm - a.pwm);
}

double raw_speed(double pwm) {
  if (pwm <= kAnchors.front().pwm) return interpolate(kAnchors[0], kAnchors[1], pwm);
  for (std::size_t i = 1; i < kAnchors.size(); ++i) {
    if (pwm <= kAnchors[i].pwm) return interpolate(kAnchors[i - 1], kAnchors[i], pwm);
  }
  return interpolate(kAnchors[3], kAnchors[4], pwm);
}

}  // namespace

double pwm_to_speed(int pwm, int dead_zone) {
  if (pwm < 0 || pwm > kPwmMax) throw ValidationError("pwm: " + std::to_string(pwm) + " outside [0, 255]");
  if (pwm < dead_zone) return 0.0;
  return raw_speed(pwm);
}

double max_wheel_speed(int dead_zone) { return pwm_to_speed(kPwmMax, dead_zone); }

int speed_to_pwm(double speed, int dead_zone) {
  if (!(speed > 0.0)) return 0;
  int best = 0;
  double best_err = std::abs(speed);
  for (int p = dead_zone; p <= kPwmMax; ++p) {
    double err = std::abs(pwm_to_speed(p, dead_zone) - speed);
    if (err < best_err) {
      best = p;
      best_err = err;
    }
  }
  return best;
}

Pose integrate_pose(const Pose& pose, double v_left, double v_right, double wheel_base, double dt) {
  double v = 0.5 * (v_left + v_right);
  double omega = (v_right - v_left) / wheel_base;
  Pose next = pose;
  if (std::abs(omega) < 1e-9) {
    next.position.x += v * dt * std::cos(pose.heading);
    next.position.y += v * dt * std::sin(pose.heading);
  } else {
    double radius = v / omega;
    double h1 = pose.heading + omega * dt;
    next.position.x += radius * (std::sin(h1) - std::sin(pose.heading));
    next.position.y -= radius * (std::cos(h1) - std::cos(pose.heading));
    next.heading = h1;
  }
  next.heading = wrap_angle(next.heading);
  return next;
}

RobotState step_dynamics(const RobotState& state, const MotorCommand& command, double dt,
                         const PlantConfig& config) {
  if (!(dt > 0.0 && dt <= 0.05)) throw ValidationError("dt: must lie in (0, 0.05] s");
  const double vmax = max_wheel_speed(config.dead_zone);
  auto target = [&](int pwm, bool reverse, double gain) {
    double v = std::min(gain * pwm_to_speed(pwm, config.dead_zone), vmax);
    return reverse ? -v : v;
  };
  const double tl = target(command.pwm_left, command.reverse_left, config.gain_left);
  const double tr = target(command.pwm_right, command.reverse_right, config.gain_right);
  RobotState next = state;
  if (config.motor_tau <= 0.0) {
    next.v_left = tl;
    next.v_right = tr;
    next.pose = integrate_pose(state.pose, tl, tr, config.geometry.wheel_base, dt);
    return next;
  }
  const double decay = std::exp(-dt / config.motor_tau);
  next.v_left = tl + (state.v_left - tl) * decay;
  next.v_right = tr + (state.v_right - tr) * decay;
  // Drive the arc at the time-average of each exponential speed profile: the
  // heading change is then exact and splitting a step barely moves the pose.
  const double avg = config.motor_tau / dt * (1.0 - decay);
  next.pose = integrate_pose(state.pose, tl + (state.v_left - tl) * avg, tr + (state.v_right - tr) * avg,
                             config.geometry.wheel_base, dt);
  return next;
}

SensorPoints ir_sensor_points(const RobotState& state, const RobotGeometry& g) {
  Vec2 fwd = unit_from_angle(state.pose.heading);
  Vec2 left{-fwd.y, fwd.x};
  Vec2 mid = state.pose.position + fwd * g.sensor_forward_offset;
  double half = g.sensor_lateral_spacing / 2.0;
  return {mid + left * half, mid - left * half, {mid, state.pose.heading}};
}

Pose ultrasonic_mount(const RobotState& state, const RobotGeometry& g) {
  return {state.pose.position + unit_from_angle(state.pose.heading) * g.ultrasonic_forward_offset,
          state.pose.heading};
}

RobotState state_with_reference_at(const Pose& reference, const RobotGeometry& g) {
  RobotState s;
  s.pose.heading = reference.heading;
  s.pose.position = reference.position - unit_from_angle(reference.heading) * g.sensor_forward_offset;
  return s;
}

std::optional<double> lateral_error_cm(const Track& track, const RobotState& state,
                                       const RobotGeometry& geometry) {
  return lateral_error_cm(track, ir_sensor_points(state, geometry).midpoint);
}

}  // namespace lfl
