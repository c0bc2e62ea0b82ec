#pragma once

#include <cstddef>
#include <span>

namespace lfl {

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double max = 0.0;
  double ci_low = 0.0;  // 95% Student-t interval for the mean
  double ci_high = 0.0;
};

// Throws ValidationError on an empty sample. A single value gives std 0 and a
// degenerate interval at the point.
SampleSummary summarize(std::span<const double> values);

// I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);
// P(T > t).
double student_t_sf(double t, double df);
// Inverse CDF for p in (0, 1).
double student_t_quantile(double p, double df);

enum class TTestKind { kPooled, kWelch };

// Caps applied when a zero-variance pair makes t or d infinite.
inline constexpr double kStatCap = 1e6;

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_one_tailed = 0.5;  // H1: mean_a > mean_b
  double p_two_tailed = 1.0;
  double cohens_d = 0.0;      // (mean_a - mean_b) / pooled std
  bool capped = false;
};

// Each sample needs at least two values.
TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind = TTestKind::kPooled);

}  // namespace lfl
