#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfl/control.hpp"
#include "lfl/plant.hpp"
#include "lfl/sensors.hpp"
#include "lfl/supervisor.hpp"
#include "lfl/track.hpp"

namespace lfl {

enum class ControllerKind { kPid, kOnOff };

struct ControllerConfig {
  ControllerKind kind = ControllerKind::kPid;
  // Gains retuned for the simulated plant; PidGains{} holds the hardware set.
  PidGains gains{60.0, 700.0, 3.0, 0.05};
  int base_pwm = 150;
  int onoff_turn = 60;
  // The PID mixer's "left" channel drives the right wheel and vice versa.
  bool pid_cross_wired = true;
};

// Where and how the robot starts. Offsets are applied to the IR sensor
// midpoint relative to the centerline pose at `start_arc_length`.
struct InitialPlacement {
  double start_arc_length = 0.0;  // m
  double lateral_offset = 0.0;    // m, positive to the left of the path
  double heading_offset = 0.0;    // rad
  double lateral_sigma = 0.003;   // m, seeded perturbation
  double heading_sigma = 0.03;    // rad, seeded perturbation
  double initial_speed = 0.0;     // m/s on both wheels
};

struct ScenarioConfig {
  PlantConfig plant;
  IrSensorModel ir;
  UltrasonicModel ultrasonic;
  ControllerConfig controller;
  SupervisorConfig supervisor;
  InitialPlacement placement;
  std::optional<int> threshold_left;
  std::optional<int> threshold_right;
  bool fsm_enabled = true;
  double duration = 10.0;     // s
  double physics_step = 0.001;  // s
  std::uint64_t seed = 42;
};

struct TickLog {
  double t = 0.0;
  Pose pose;
  double lateral_error_cm = 0.0;
  int raw_left = 0;
  int raw_right = 0;
  int filtered_left = 0;
  int filtered_right = 0;
  int bit_left = 0;
  int bit_right = 0;
  std::optional<double> ultrasonic;
  Mode mode = Mode::kFollow;
  // Signed wheel PWM as applied (negative = reverse), left wheel then right.
  int pwm_left = 0;
  int pwm_right = 0;
  double error = 0.0;
  double integral = 0.0;
  double u = 0.0;

  // Not part of the CSV; kept for invariant checks.
  SupervisorState supervisor;
  PidState pid;
  DebounceState debounce;
};

struct TransitionEvent {
  double t = 0.0;
  Mode from = Mode::kFollow;
  Mode to = Mode::kFollow;
  std::string trigger;
};

enum class ScenarioStatus { kCompleted, kOffTrack };

// Receives ticks as they are produced.
class TickSink {
 public:
  virtual ~TickSink() = default;
  virtual void on_tick(const TickLog& tick) = 0;
  virtual void on_transition(const TransitionEvent&) {}
};

struct ScenarioSummary {
  ScenarioStatus status = ScenarioStatus::kCompleted;
  std::size_t ticks = 0;
  std::optional<double> off_track_time;
  RobotState final_state;
  int threshold_left = 0;
  int threshold_right = 0;
};

struct ScenarioResult {
  ScenarioSummary summary;
  std::vector<TickLog> ticks;
  std::vector<TransitionEvent> transitions;
};

ScenarioSummary run_scenario(const Track& track, const ScenarioConfig& config, TickSink& sink);
ScenarioResult run_scenario(const Track& track, const ScenarioConfig& config);

std::size_t tick_count(double duration, double t_s);

// Calibrates one IR channel the way the robot does at power-up: 50 readings over
// white and 50 over black from the given stream.
CalibrationRecord calibrate_ir(const IrSensorModel& model, double reflect_surface, double reflect_line,
                               RandomStream& rng, std::size_t samples = kMinCalibrationSamples);

inline constexpr const char* kTickCsvHeader =
    "t,x,y,heading,lateral_error_cm,raw_left,raw_right,filtered_left,filtered_right,bit_left,bit_right,"
    "ultrasonic_m,mode,pwm_left,pwm_right,error,integral,u";

std::string tick_csv_row(const TickLog& tick);
std::string ticks_to_csv(const std::vector<TickLog>& ticks);

inline constexpr const char* kTransitionCsvHeader = "t,from,to,trigger";
std::string transitions_to_csv(const std::vector<TransitionEvent>& events);

// Root-mean-square of the lateral error for ticks with t in [t0, t1].
double rmse(const std::vector<TickLog>& ticks, double t0, double t1);
double rmse(const std::vector<TickLog>& ticks);

}  // namespace lfl
