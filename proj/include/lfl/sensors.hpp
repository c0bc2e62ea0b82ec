#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>

#include "lfl/plant.hpp"
#include "lfl/rng.hpp"
#include "lfl/track.hpp"

namespace lfl {

inline constexpr int kAdcMax = 1023;

// TCRT5000-style reflective sensor behind a 10-bit ADC. With `invert` set a
// dark surface reads high, so a reading above threshold means "on the line".
struct IrSensorModel {
  double gain = 900.0;
  double noise_sigma = 6.0;
  bool invert = true;
  // ADC reads pushed through the median window per control tick. Five reads
  // refresh the whole window each tick; one read makes it span five ticks.
  int samples_per_tick = 5;
};

int read_ir(const IrSensorModel& model, double reflectance, RandomStream& rng);

int median5(std::span<const int, 5> window);

// Sliding 5-sample median; the window is filled with the first reading.
class MedianFilter {
 public:
  int push(int sample);
  bool primed() const { return primed_; }
  const std::array<int, 5>& window() const { return window_; }

 private:
  std::array<int, 5> window_{};
  std::size_t next_ = 0;
  bool primed_ = false;
};

struct CalibrationRecord {
  double v_white_mean = 0.0;
  double v_black_mean = 0.0;
  int v_threshold = 0;
  double sample_std = 0.0;  // pooled over both surfaces
  std::size_t sample_count = 0;  // per surface (the smaller of the two)
};

inline constexpr std::size_t kMinCalibrationSamples = 50;

// Midpoint threshold between the surface means. Throws ValidationError on
// fewer than 50 samples per surface or when black does not read above white.
CalibrationRecord calibrate_threshold(std::span<const int> white_samples, std::span<const int> black_samples);

// 1 iff counts > threshold.
int binarize(int counts, const CalibrationRecord& record);
int binarize(int counts, int threshold);

struct ConsistencyVerdict {
  bool pass = false;
  double std_dev = 0.0;
};

inline constexpr double kConsistencyLimit = 8.0;

ConsistencyVerdict verify_consistency(std::span<const int> samples);

struct UltrasonicModel {
  double max_range = 4.0;
  double min_range = 0.02;
  double temperature = 25.0;
  double timing_jitter_sigma = 50e-6;
  double sample_rate = 20.0;
};

// m/s; throws ValidationError outside [-40, 60] C.
double speed_of_sound(double temperature_c);

// Empty when the distance falls outside [min_range, max_range].
std::optional<double> echo_to_distance(double round_trip_s, double temperature_c, double min_range = 0.02,
                                       double max_range = 4.0);

std::optional<double> measure_distance(const UltrasonicModel& model, const Track& track, const RobotState& state,
                                       const RobotGeometry& geometry, double t, RandomStream& rng);

struct DebounceState {
  int consecutive_below = 0;
  double threshold_distance = 0.20;
  int required = 3;
};

std::pair<DebounceState, bool> debounce_update(DebounceState state, std::optional<double> distance);

}  // namespace lfl
