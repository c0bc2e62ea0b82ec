#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "lfl/control.hpp"
#include "lfl/error.hpp"
#include "lfl/runtime.hpp"
#include "lfl/track.hpp"

namespace lfl {

enum class OscillationClass { kNone, kDecaying, kSustained, kGrowing };

std::string_view oscillation_class_name(OscillationClass c);

struct OscillationAnalysis {
  OscillationClass classification = OscillationClass::kNone;
  double period = 0.0;     // s, 2 x mean half-period
  double amplitude = 0.0;  // mean half-cycle peak, in trace units
  double peak_ratio = 0.0; // per half-cycle growth factor of the peaks
  std::size_t zero_crossings = 0;
};

struct ClassifyOptions {
  double dt = 0.05;            // sample spacing, s
  double transient = 2.0;      // discarded prefix, s
  double min_duration = 10.0;  // s
  double sustained_band = 0.05;
};

// Zero-crossing / peak-ratio classification of an error trace. Throws
// ValidationError when the trace is shorter than min_duration. Fewer than four
// zero crossings after the transient yields OscillationClass::kNone.
OscillationAnalysis classify_oscillation(std::span<const double> trace, const ClassifyOptions& opts = {});

// A P-only closed loop: runs with the given kp and returns the error trace.
struct LoopResponse {
  std::vector<double> trace;
  bool diverged = false;  // left the valid region before the run ended
};
using ClosedLoop = std::function<LoopResponse(double kp)>;

struct TuningProbe {
  double kp = 0.0;
  OscillationAnalysis analysis;
  bool diverged = false;
};

struct OscillationReport {
  double ku = 0.0;
  double tu = 0.0;
  double amplitude = 0.0;
  OscillationClass classification = OscillationClass::kNone;
  std::size_t iterations = 0;
  std::vector<TuningProbe> probes;  // in evaluation order
  std::vector<double> critical_trace;
};

// What marks the upper end of the bracket.
enum class CriticalCriterion {
  kGrowth,  // peak ratio above 1 (linear plants)
  kOnset,   // no longer decaying, i.e. sustained or growing (relay-like loops)
};

struct TuningOptions {
  double kp_lo = 1.0;
  double kp_hi = 100.0;
  double tolerance = 0.05;
  // Evenly spaced probes over [kp_lo, kp_hi] before bisecting; the bracket is
  // the first adjacent pair whose upper probe meets the criterion.
  std::size_t scan_points = 5;
  CriticalCriterion criterion = CriticalCriterion::kGrowth;
  ClassifyOptions classify;
};

class TuningError : public SimulationError {
 public:
  TuningError(const std::string& what, std::vector<TuningProbe> probes)
      : SimulationError(what), probes_(std::move(probes)) {}
  const std::vector<TuningProbe>& probes() const { return probes_; }

 private:
  std::vector<TuningProbe> probes_;
};

// Scans, then bisects kp between the last response below the criterion and the
// first one meeting it, until the bracket is narrower than the tolerance.
OscillationReport find_critical_gain(const ClosedLoop& loop, const TuningOptions& opts);

// Ziegler-Nichols closed-loop PID table.
PidGains zn_gains(double ku, double tu);

// Third-order reference plant 1/(s(s+1)(s+2)), bilinear-discretized at t_s, with
// a unit initial output offset. Its continuous ultimate gain is 6 at sqrt(2) rad/s.
ClosedLoop reference_plant_loop(double t_s = 0.05, double duration = 60.0);

// P-only line following on `track` with FSM and noise disabled, starting 1 cm off
// the line. The trace is the lateral error in cm.
ClosedLoop robot_loop(const Track& track, const ScenarioConfig& base, double duration = 14.0);

}  // namespace lfl
