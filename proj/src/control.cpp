#include "lfl/control.hpp"

#include <algorithm>
#include <cmath>

namespace lfl {

ErrorSample compute_error(int s_left, int s_right, int lost_counter) {
  if (s_left == 0 && s_right == 0) return {0.0, lost_counter + 1};
  return {(s_left - s_right) / 2.0, 0};
}

PidOutput pid_step(const PidState& state, const PidGains& gains, double error) {
  PidOutput out;
  out.state = state;
  out.state.integral = std::clamp(state.integral + error * gains.t_s, -kIntegralLimit, kIntegralLimit);
  out.derivative = (error - state.prev_error) / gains.t_s;
  out.u = gains.kp * error + gains.ki * out.state.integral + gains.kd * out.derivative;
  out.state.prev_error = error;
  return out;
}

int round_pwm(double value) {
  if (std::isnan(value)) return 0;
  return static_cast<int>(std::clamp(std::round(value), 0.0, static_cast<double>(kPwmMax)));
}

MotorCommand mix_motors(int v_base, double u) {
  return {round_pwm(v_base + u), round_pwm(v_base - u), false, false};
}

MotorCommand onoff_step(int s_left, int s_right, int v_base, int v_turn) {
  if (s_left == s_right) return {round_pwm(v_base), round_pwm(v_base), false, false};
  int dir = s_left == 1 ? 1 : -1;
  return {round_pwm(v_base - dir * v_turn), round_pwm(v_base + dir * v_turn), false, false};
}

ControlOutput control_tick(const LineBits& bits, const PidState& state, const PidGains& gains) {
  ErrorSample e = compute_error(bits.left, bits.right, state.lost_counter);
  PidState s = state;
  s.lost_counter = e.lost_counter;
  PidOutput pid = pid_step(s, gains, e.error);
  ControlOutput out;
  out.state = pid.state;
  out.command = mix_motors(state.v_base, pid.u);
  out.lost = out.state.lost_counter > kLostLimit;
  out.error = e.error;
  out.u = pid.u;
  return out;
}

}  // namespace lfl
