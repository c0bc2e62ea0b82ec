#include "lfl/tuning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace lfl {

std::string_view oscillation_class_name(OscillationClass c) {
  switch (c) {
    case OscillationClass::kNone: return "none";
    case OscillationClass::kDecaying: return "decaying";
    case OscillationClass::kSustained: return "sustained";
    case OscillationClass::kGrowing: return "growing";
  }
  return "none";
}

OscillationAnalysis classify_oscillation(std::span<const double> trace, const ClassifyOptions& opts) {
  if (opts.dt <= 0) throw ValidationError("classify_oscillation: dt must be positive");
  const double duration = static_cast<double>(trace.size()) * opts.dt;
  if (duration + 1e-9 < opts.min_duration) {
    throw ValidationError("classify_oscillation: trace too short (" + std::to_string(duration) + " s)");
  }
  const auto skip = static_cast<std::size_t>(std::ceil(opts.transient / opts.dt - 1e-9));
  OscillationAnalysis out;
  if (skip + 2 > trace.size()) return out;

  // Interpolated crossing times plus the sample index just after each crossing.
  std::vector<double> times;
  std::vector<std::size_t> after;
  for (std::size_t i = skip + 1; i < trace.size(); ++i) {
    double a = trace[i - 1], b = trace[i];
    if ((a < 0 && b >= 0) || (a > 0 && b <= 0)) {
      if (a > 0 && b == 0) continue;  // counted when the trace leaves zero
      double frac = a / (a - b);
      times.push_back((static_cast<double>(i - 1) + frac) * opts.dt);
      after.push_back(i);
    }
  }
  out.zero_crossings = times.size();
  if (times.size() < 4) return out;

  double half = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  out.period = 2.0 * half;

  std::vector<double> peaks;
  for (std::size_t c = 0; c + 1 < after.size(); ++c) {
    double peak = 0.0;
    for (std::size_t i = after[c]; i < after[c + 1]; ++i) peak = std::max(peak, std::abs(trace[i]));
    peaks.push_back(peak);
  }
  out.amplitude = std::accumulate(peaks.begin(), peaks.end(), 0.0) / static_cast<double>(peaks.size());

  // Least-squares slope of log(peak) over the half-cycle index.
  std::vector<double> logs;
  for (double p : peaks) logs.push_back(std::log(std::max(p, 1e-300)));
  const double n = static_cast<double>(logs.size());
  double mx = (n - 1) / 2.0;
  double my = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    double dx = static_cast<double>(i) - mx;
    sxy += dx * (logs[i] - my);
    sxx += dx * dx;
  }
  out.peak_ratio = sxx > 0 ? std::exp(sxy / sxx) : 1.0;

  if (out.peak_ratio < 1.0 - opts.sustained_band) {
    out.classification = OscillationClass::kDecaying;
  } else if (out.peak_ratio > 1.0 + opts.sustained_band) {
    out.classification = OscillationClass::kGrowing;
  } else {
    out.classification = OscillationClass::kSustained;
  }
  return out;
}

namespace {

TuningProbe probe(const ClosedLoop& loop, double kp, const ClassifyOptions& opts) {
  TuningProbe p;
  p.kp = kp;
  LoopResponse r = loop(kp);
  p.diverged = r.diverged;
  if (r.diverged) {
    p.analysis.classification = OscillationClass::kGrowing;
    return p;
  }
  p.analysis = classify_oscillation(r.trace, opts);
  return p;
}

// Under kGrowth the bracket is split on the sign of the growth rate (peak ratio
// vs 1), not on the +-5% labelling band; splitting on the band would bias ku
// upward by the width of the band.
bool critical(const TuningProbe& p, const TuningOptions& opts) {
  if (p.diverged) return true;
  const OscillationAnalysis& a = p.analysis;
  if (a.classification == OscillationClass::kNone) return false;
  if (opts.criterion == CriticalCriterion::kOnset) return a.classification != OscillationClass::kDecaying;
  return a.peak_ratio > 1.0;
}

}  // namespace

OscillationReport find_critical_gain(const ClosedLoop& loop, const TuningOptions& opts) {
  if (!(opts.kp_lo < opts.kp_hi) || opts.kp_lo < 0) {
    throw ValidationError("find_critical_gain: kp range must satisfy 0 <= lo < hi");
  }
  if (opts.tolerance <= 0) throw ValidationError("find_critical_gain: tolerance must be positive");
  const std::size_t points = std::max<std::size_t>(opts.scan_points, 2);

  OscillationReport report;
  TuningProbe last_stable, first_growing;
  bool found = false;
  for (std::size_t i = 0; i < points && !found; ++i) {
    double kp = opts.kp_lo + (opts.kp_hi - opts.kp_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    TuningProbe p = probe(loop, kp, opts.classify);
    report.probes.push_back(p);
    if (!critical(p, opts)) {
      last_stable = p;
      continue;
    }
    if (i == 0) {
      throw TuningError("find_critical_gain: response already critical at kp=" + std::to_string(opts.kp_lo),
                        report.probes);
    }
    first_growing = p;
    found = true;
  }
  if (!found) {
    throw TuningError("find_critical_gain: no critical response up to kp=" + std::to_string(opts.kp_hi),
                      report.probes);
  }

  double a = last_stable.kp, b = first_growing.kp;
  while (b - a >= opts.tolerance) {
    double mid = 0.5 * (a + b);
    TuningProbe p = probe(loop, mid, opts.classify);
    report.probes.push_back(p);
    ++report.iterations;
    if (critical(p, opts)) {
      b = mid;
      first_growing = p;
    } else {
      a = mid;
      last_stable = p;
    }
  }

  report.ku = 0.5 * (a + b);
  LoopResponse at = loop(report.ku);
  report.critical_trace = at.trace;
  OscillationAnalysis at_ku;
  if (!at.diverged) at_ku = classify_oscillation(at.trace, opts.classify);
  report.classification = at.diverged ? OscillationClass::kGrowing : at_ku.classification;
  report.amplitude = at_ku.amplitude;
  // Prefer the period measured at the critical gain; fall back to the bracket.
  for (const OscillationAnalysis* a2 : {&at_ku, &first_growing.analysis, &last_stable.analysis}) {
    if (a2->period > 0) {
      report.tu = a2->period;
      if (report.amplitude <= 0) report.amplitude = a2->amplitude;
      break;
    }
  }
  if (report.tu <= 0) {
    throw TuningError("find_critical_gain: no oscillation period could be measured", report.probes);
  }
  return report;
}

PidGains zn_gains(double ku, double tu) {
  if (!(tu > 0)) throw ValidationError("zn_gains: tu must be positive");
  if (!(ku >= 0)) throw ValidationError("zn_gains: ku must be non-negative");
  PidGains g;
  g.kp = 0.6 * ku;
  // Grouped as kp * (2 / tu) rather than 2 * kp / tu: same value, but this
  // ordering rounds (8.5, 0.4) to exactly 25.5.
  g.ki = g.kp * (2.0 / tu);
  g.kd = g.kp * tu / 8.0;
  return g;
}

namespace {

using Poly = std::vector<double>;  // coefficients, highest power first

Poly mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly add(Poly a, Poly b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::size_t off = a.size() - b.size();
  for (std::size_t i = 0; i < b.size(); ++i) a[off + i] += b[i];
  return a;
}

Poly scale(Poly a, double k) {
  for (double& x : a) x *= k;
  return a;
}

}  // namespace

ClosedLoop reference_plant_loop(double t_s, double duration) {
  if (t_s <= 0 || duration <= 0) throw ValidationError("reference_plant_loop: t_s and duration must be positive");
  // s -> c (z - 1) / (z + 1); multiply through by (z + 1)^3.
  const double c = 2.0 / t_s;
  const Poly zm{1.0, -1.0}, zp{1.0, 1.0};
  Poly num = mul(mul(zp, zp), zp);
  Poly den = add(add(scale(mul(mul(zm, zm), zm), c * c * c), scale(mul(mul(zm, zm), zp), 3 * c * c)),
                 scale(mul(mul(zm, zp), zp), 2 * c));
  const std::size_t steps = static_cast<std::size_t>(std::llround(duration / t_s));

  return [num, den, steps](double kp) {
    // History, most recent first: y[k-1..k-3], u[k-1..k-3]. Start at rest, 1 unit off.
    std::array<double, 3> y{1.0, 1.0, 1.0}, u{0.0, 0.0, 0.0};
    LoopResponse r;
    r.trace.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      // den[0] y_k + sum den[i] y_{k-i} = num[0] u_k + sum num[i] u_{k-i}, u_k = -kp y_k.
      double rhs = 0.0;
      for (std::size_t i = 1; i < 4; ++i) rhs += num[i] * u[i - 1] - den[i] * y[i - 1];
      double yk = rhs / (den[0] + kp * num[0]);
      double uk = -kp * yk;
      y = {yk, y[0], y[1]};
      u = {uk, u[0], u[1]};
      r.trace.push_back(yk);
      if (!std::isfinite(yk) || std::abs(yk) > 1e9) {
        r.diverged = true;
        break;
      }
    }
    return r;
  };
}

ClosedLoop robot_loop(const Track& track, const ScenarioConfig& base, double duration) {
  ScenarioConfig cfg = base;
  cfg.fsm_enabled = false;
  cfg.duration = duration;
  cfg.controller.kind = ControllerKind::kPid;
  cfg.controller.gains.ki = 0.0;
  cfg.controller.gains.kd = 0.0;
  cfg.ir.noise_sigma = 0.0;
  cfg.ultrasonic.timing_jitter_sigma = 0.0;
  cfg.placement.lateral_offset = 0.01;
  cfg.placement.heading_offset = 0.0;
  cfg.placement.lateral_sigma = 0.0;
  cfg.placement.heading_sigma = 0.0;
  const std::size_t expected = tick_count(duration, cfg.controller.gains.t_s);

  return [track, cfg, expected](double kp) {
    ScenarioConfig c = cfg;
    c.controller.gains.kp = kp;
    ScenarioResult res = run_scenario(track, c);
    LoopResponse r;
    r.trace.reserve(res.ticks.size());
    for (const TickLog& t : res.ticks) r.trace.push_back(t.lateral_error_cm);
    r.diverged = res.summary.status != ScenarioStatus::kCompleted || res.ticks.size() < expected;
    return r;
  };
}

}  // namespace lfl
