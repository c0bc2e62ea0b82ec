#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfl/config.hpp"
#include "lfl/runtime.hpp"
#include "lfl/track.hpp"

namespace lfl {

// Statistics of |lateral error| over one run, in cm.
struct ErrorSummary {
  double mean = 0.0;
  double std = 0.0;  // population std over ticks
  double min = 0.0;
  double max = 0.0;
  double rmse = 0.0;
};

ErrorSummary error_summary(std::span<const TickLog> ticks);

struct TrialRecord {
  std::string axis_value;
  std::size_t trial = 0;  // index within its axis value
  std::uint64_t seed = 0;
  std::string fingerprint;  // of the trial's resolved config
  ErrorSummary error;
  std::size_t detections = 0;  // DETECT entries
  std::size_t transitions = 0;
  bool completed = true;
  std::vector<TransitionEvent> events;  // in memory only
};

struct TraceSeries {
  std::string label;
  std::vector<double> t;
  std::vector<double> error_cm;
};

struct SweepOptions {
  std::string axis;
  std::vector<std::string> values;
  std::size_t trials = 1;
  std::uint64_t master_seed = 42;
  unsigned jobs = 0;  // 0: hardware concurrency
  bool keep_first_trace = false;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // grouped by value, then trial index
  std::vector<TraceSeries> traces;   // trial 0 of each value when requested
};

std::uint64_t trial_seed(std::uint64_t master_seed, std::string_view label, std::size_t index);

// Runs `trials` scenarios per axis value. The track comes from each trial's
// config, so the axis may be a track key too.
SweepResult run_sweep(const Config& base, const SweepOptions& options);

// Values grouped by axis value, in the order of first appearance.
std::vector<std::pair<std::string, std::vector<const TrialRecord*>>> group_by_value(
    const std::vector<TrialRecord>& records);

// ---- obstacle detection -------------------------------------------------

struct DetectionOptions {
  std::vector<double> distances{0.10, 0.20, 0.30, 0.40};
  std::size_t encounters = 25;
  double obstacle_radius = 0.03;
  double timeout = 10.0;  // s per run
  std::uint64_t master_seed = 42;
  unsigned jobs = 0;
};

struct EncounterRecord {
  double distance = 0.0;  // sensor to obstacle surface at the start, m
  bool control = false;   // obstacle-free run
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool detected = false;  // DETECT entered (before closest approach, for encounters)
  std::optional<double> response_ms;  // first below-threshold sample to AVOID entry
};

// One encounter and one obstacle-free control per index and distance, on the
// given (straight) track.
std::vector<EncounterRecord> detection_study(const Track& track, const ScenarioConfig& base,
                                             const DetectionOptions& options);

// ---- state machine timing -----------------------------------------------

enum class FsmMetric { kDetectToAvoid, kAvoidCompletion, kLineReacquisition, kRecoveryFromLoss };

inline constexpr FsmMetric kFsmMetrics[] = {FsmMetric::kDetectToAvoid, FsmMetric::kAvoidCompletion,
                                            FsmMetric::kLineReacquisition, FsmMetric::kRecoveryFromLoss};

std::string_view fsm_metric_name(FsmMetric m);
std::optional<FsmMetric> fsm_metric_from_name(std::string_view name);

struct TimingSample {
  FsmMetric metric = FsmMetric::kDetectToAvoid;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double value = 0.0;  // s; meaningful when success
};

struct FsmTimingOptions {
  std::size_t encounters = 50;
  double obstacle_distance = 0.30;
  double obstacle_radius = 0.03;
  double loss_offset = 0.05;  // m, lateral start offset for the loss runs
  double timeout = 10.0;      // s per metric
  std::uint64_t master_seed = 42;
  unsigned jobs = 0;
};

// Metrics of one obstacle encounter, from its transition log.
std::vector<TimingSample> encounter_timings(const std::vector<TransitionEvent>& events, double timeout);
// Time from the first SEARCH entry to the next FOLLOW entry.
TimingSample loss_timing(const std::vector<TransitionEvent>& events, double timeout);

std::vector<TimingSample> fsm_timing_study(const Track& track, const ScenarioConfig& base,
                                           const FsmTimingOptions& options);

// ---- power --------------------------------------------------------------

struct PowerRow {
  std::string mode;
  double current_ma = 0.0;
  double duty_pct = 0.0;
};

struct PowerTable {
  std::vector<PowerRow> rows;
  double battery_capacity_mah = 2200.0;
};

// The five operating modes of the bench measurement.
PowerTable default_power_table();
// Throws ValidationError unless duties sum to 100 +- 0.01 and values are sane.
void validate_power_table(const PowerTable& table);
double weighted_current(const PowerTable& table);
double estimate_runtime(double capacity_mah, double current_ma, double derating = 1.0);

// ---- soak ---------------------------------------------------------------

struct SoakResult {
  std::size_t ticks_requested = 0;
  std::size_t ticks = 0;
  std::size_t violations = 0;
  std::string first_violation;
  std::uint64_t digest = 0;  // over every CSV row and transition
  bool completed = false;
  double max_abs_integral = 0.0;
  int max_lost_counter = 0;
  std::size_t transitions = 0;
};

// Runs one continuous scenario of `ticks` control periods, checking state
// invariants on every tick without keeping the log.
SoakResult run_soak(const Track& track, const ScenarioConfig& base, std::size_t ticks);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception by
// index is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace lfl
