#include "lfl/sensors.hpp"

#include <algorithm>
#include <cmath>

#include "lfl/error.hpp"

namespace lfl {

namespace {

double mean_of(std::span<const int> xs) {
  double s = 0.0;
  for (int x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sum_sq_dev(std::span<const int> xs, double mean) {
  double s = 0.0;
  for (int x : xs) s += (x - mean) * (x - mean);
  return s;
}

}  // namespace

int read_ir(const IrSensorModel& model, double reflectance, RandomStream& rng) {
  double response = model.invert ? 1.0 - reflectance : reflectance;
  double v = model.gain * response + rng.gaussian(model.noise_sigma);
  return static_cast<int>(std::clamp(std::round(v), 0.0, static_cast<double>(kAdcMax)));
}

int median5(std::span<const int, 5> window) {
  std::array<int, 5> w;
  std::copy(window.begin(), window.end(), w.begin());
  std::nth_element(w.begin(), w.begin() + 2, w.end());
  return w[2];
}

int MedianFilter::push(int sample) {
  if (!primed_) {
    window_.fill(sample);
    primed_ = true;
  } else {
    window_[next_] = sample;
  }
  next_ = (next_ + 1) % window_.size();
  return median5(window_);
}

CalibrationRecord calibrate_threshold(std::span<const int> white, std::span<const int> black) {
  if (white.size() < kMinCalibrationSamples || black.size() < kMinCalibrationSamples) {
    throw ValidationError("calibration: insufficient samples (need at least 50 per surface)");
  }
  CalibrationRecord rec;
  rec.v_white_mean = mean_of(white);
  rec.v_black_mean = mean_of(black);
  rec.sample_count = std::min(white.size(), black.size());
  rec.v_threshold = static_cast<int>(std::round((rec.v_white_mean + rec.v_black_mean) / 2.0));
  if (!(rec.v_black_mean > rec.v_white_mean) || !(rec.v_threshold > rec.v_white_mean) ||
      !(rec.v_threshold < rec.v_black_mean)) {
    throw ValidationError("calibration: surfaces indistinguishable");
  }
  double ss = sum_sq_dev(white, rec.v_white_mean) + sum_sq_dev(black, rec.v_black_mean);
  rec.sample_std = std::sqrt(ss / static_cast<double>(white.size() + black.size() - 2));
  return rec;
}

int binarize(int counts, int threshold) { return counts > threshold ? 1 : 0; }
int binarize(int counts, const CalibrationRecord& record) { return binarize(counts, record.v_threshold); }

ConsistencyVerdict verify_consistency(std::span<const int> samples) {
  ConsistencyVerdict v;
  if (samples.size() >= 2) {
    double m = mean_of(samples);
    v.std_dev = std::sqrt(sum_sq_dev(samples, m) / static_cast<double>(samples.size() - 1));
  }
  v.pass = v.std_dev < kConsistencyLimit;
  return v;
}

double speed_of_sound(double temperature_c) {
  if (!(temperature_c >= -40.0 && temperature_c <= 60.0)) {
    throw ValidationError("temperature: outside [-40, 60] C");
  }
  return 331.3 * std::sqrt(1.0 + temperature_c / 273.15);
}

std::optional<double> echo_to_distance(double round_trip_s, double temperature_c, double min_range,
                                       double max_range) {
  if (!(round_trip_s >= 0.0)) return std::nullopt;
  double d = speed_of_sound(temperature_c) * round_trip_s / 2.0;
  if (d < min_range || d > max_range) return std::nullopt;
  return d;
}

std::optional<double> measure_distance(const UltrasonicModel& model, const Track& track, const RobotState& state,
                                       const RobotGeometry& geometry, double t, RandomStream& rng) {
  auto hit = raycast_obstacle(track, ultrasonic_mount(state, geometry), model.max_range, t);
  if (!hit) return std::nullopt;
  double v = speed_of_sound(model.temperature);
  double round_trip = 2.0 * *hit / v + rng.gaussian(model.timing_jitter_sigma);
  return echo_to_distance(round_trip, model.temperature, model.min_range, model.max_range);
}

std::pair<DebounceState, bool> debounce_update(DebounceState state, std::optional<double> distance) {
  if (distance && *distance < state.threshold_distance) {
    state.consecutive_below = std::min(state.consecutive_below + 1, state.required);
  } else {
    state.consecutive_below = 0;
  }
  return {state, state.consecutive_below >= state.required};
}

}  // namespace lfl
