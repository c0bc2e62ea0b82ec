#pragma once

#include "lfl/motor.hpp"

namespace lfl {

struct PidGains {
  double kp = 4.8;
  double ki = 22.0;
  double kd = 0.18;
  double t_s = 0.05;  // sampling period, s
};

inline constexpr double kIntegralLimit = 50.0;
inline constexpr int kLostLimit = 10;

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  int lost_counter = 0;
  int v_base = 150;
};

struct ErrorSample {
  double error = 0.0;
  int lost_counter = 0;
};

// Two-sensor position error: (S_L - S_R) / 2, or 0 with the lost counter
// advanced when neither sensor sees the line.
ErrorSample compute_error(int s_left, int s_right, int lost_counter);

struct PidOutput {
  PidState state;
  double u = 0.0;
  double derivative = 0.0;
};

// One discrete PID update; the integral is clamped to +-50 after accumulation.
PidOutput pid_step(const PidState& state, const PidGains& gains, double error);

// Rounds half away from zero and clips to [0, 255].
int round_pwm(double value);

MotorCommand mix_motors(int v_base, double u);

// Bang-bang baseline: steer toward the sensor that sees the line.
MotorCommand onoff_step(int s_left, int s_right, int v_base, int v_turn = 60);

// Binarized line-sensor pair for one tick.
struct LineBits {
  int left = 0;
  int right = 0;
};

struct ControlOutput {
  PidState state;
  MotorCommand command;
  bool lost = false;
  double error = 0.0;
  double u = 0.0;
};

ControlOutput control_tick(const LineBits& bits, const PidState& state, const PidGains& gains);

}  // namespace lfl
