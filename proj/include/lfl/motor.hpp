#pragma once

namespace lfl {

inline constexpr int kPwmMax = 255;

// One control tick's drive request for the two motor channels.
struct MotorCommand {
  int pwm_left = 0;
  int pwm_right = 0;
  bool reverse_left = false;
  bool reverse_right = false;

  bool operator==(const MotorCommand&) const = default;
};

}  // namespace lfl
