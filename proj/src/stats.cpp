#include "lfl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfl/error.hpp"

namespace lfl {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // n - 1 denominator
};

Moments moments(std::span<const double> v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(v.size() - 1);
  }
  return m;
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw ValidationError("incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete beta: x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fast on the side of the mean; use symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  if (!(df > 0)) throw ValidationError("student t: df must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t > 0 ? tail : 1.0 - tail;
}

double student_t_cdf(double t, double df) { return 1.0 - student_t_sf(t, df); }

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("student t quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);
  double lo = 0.0, hi = 1.0;
  while (student_t_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return hi;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SampleSummary summarize(std::span<const double> values) {
  if (values.empty()) throw ValidationError("summarize: empty sample");
  SampleSummary s;
  s.n = values.size();
  Moments m = moments(values);
  s.mean = m.mean;
  s.std = std::sqrt(m.var);
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  double half = 0.0;
  if (s.n > 1) half = student_t_quantile(0.975, static_cast<double>(s.n - 1)) * s.std / std::sqrt(double(s.n));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("t_test: each sample needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  Moments ma = moments(a), mb = moments(b);
  const double diff = ma.mean - mb.mean;
  const double pooled_var = ((na - 1) * ma.var + (nb - 1) * mb.var) / (na + nb - 2);

  TTestResult r;
  double se = 0.0;
  if (kind == TTestKind::kPooled) {
    r.df = na + nb - 2;
    se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
  } else {
    const double va = ma.var / na, vb = mb.var / nb;
    se = std::sqrt(va + vb);
    const double denom = va * va / (na - 1) + vb * vb / (nb - 1);
    r.df = denom > 0 ? (va + vb) * (va + vb) / denom : na + nb - 2;
  }

  if (se > 0) {
    r.t = diff / se;
  } else if (diff != 0) {
    r.t = std::copysign(kStatCap, diff);
    r.capped = true;
  }
  if (pooled_var > 0) {
    r.cohens_d = diff / std::sqrt(pooled_var);
  } else if (diff != 0) {
    r.cohens_d = std::copysign(kStatCap, diff);
    r.capped = true;
  }

  if (r.capped && se == 0) {
    r.p_one_tailed = diff > 0 ? 0.0 : 1.0;
    r.p_two_tailed = 0.0;
  } else {
    r.p_one_tailed = student_t_sf(r.t, r.df);
    r.p_two_tailed = std::min(1.0, 2.0 * student_t_sf(std::abs(r.t), r.df));
  }
  return r;
}

}  // namespace lfl
