#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lfl/tuning.hpp"

using namespace lfl;

namespace {

std::vector<double> synth(double seconds, double dt, double (*f)(double)) {
  std::vector<double> v;
  for (std::size_t k = 0; k * dt < seconds - 1e-12; ++k) v.push_back(f(k * dt));
  return v;
}

}  // namespace

TEST(ZnGains, PublishedExampleIsExact) {
  PidGains g = zn_gains(8.5, 0.4);
  EXPECT_EQ(g.kp, 5.1);
  EXPECT_EQ(g.ki, 25.5);
  EXPECT_EQ(g.kd, 0.255);
}

TEST(ZnGains, TableArithmetic) {
  PidGains g = zn_gains(1.0, 1.0);
  EXPECT_DOUBLE_EQ(g.kp, 0.6);
  EXPECT_DOUBLE_EQ(g.ki, 1.2);
  EXPECT_DOUBLE_EQ(g.kd, 0.075);
  g = zn_gains(10.0, 0.5);
  EXPECT_DOUBLE_EQ(g.kp, 6.0);
  EXPECT_DOUBLE_EQ(g.ki, 24.0);
  EXPECT_DOUBLE_EQ(g.kd, 0.375);
  EXPECT_THROW(zn_gains(8.5, 0.0), ValidationError);
  EXPECT_THROW(zn_gains(8.5, -1.0), ValidationError);
}

TEST(ZnGains, LinearInUltimateGain) {
  PidGains a = zn_gains(3.0, 0.7);
  for (double c : {0.5, 2.0, 7.25}) {
    PidGains b = zn_gains(c * 3.0, 0.7);
    EXPECT_NEAR(b.kp, c * a.kp, 1e-12 * b.kp);
    EXPECT_NEAR(b.ki, c * a.ki, 1e-12 * b.ki);
    EXPECT_NEAR(b.kd, c * a.kd, 1e-12 * b.kd);
  }
}

TEST(Classify, SustainedSinusoid) {
  auto trace = synth(12.0, 0.05, [](double t) { return std::sin(2 * kPi * t / 0.4 + 0.3); });
  OscillationAnalysis a = classify_oscillation(trace);
  EXPECT_EQ(a.classification, OscillationClass::kSustained);
  EXPECT_NEAR(a.period, 0.40, 0.01);
}

TEST(Classify, DecayingAndGrowing) {
  auto decay = synth(12.0, 0.05, [](double t) { return std::exp(-t) * std::sin(2 * kPi * t / 0.4 + 0.3); });
  EXPECT_EQ(classify_oscillation(decay).classification, OscillationClass::kDecaying);
  auto grow = synth(12.0, 0.05, [](double t) { return std::exp(0.3 * t) * std::sin(2 * kPi * t / 1.3); });
  EXPECT_EQ(classify_oscillation(grow).classification, OscillationClass::kGrowing);
}

TEST(Classify, FlatAndShortTraces) {
  std::vector<double> flat(240, 0.0);
  EXPECT_EQ(classify_oscillation(flat).classification, OscillationClass::kNone);
  std::vector<double> brief(100, 0.0);
  EXPECT_THROW(classify_oscillation(brief), ValidationError);
}

TEST(CriticalGain, ReferencePlantOracle) {
  // Routh: 1/(s(s+1)(s+2)) under P control, s^3 + 3s^2 + 2s + K, K_u = 6, w = sqrt(2).
  const double tu_exact = 2 * kPi / std::sqrt(2.0);
  TuningOptions o;
  o.kp_lo = 1.0;
  o.kp_hi = 20.0;
  OscillationReport r = find_critical_gain(reference_plant_loop(), o);
  EXPECT_NEAR(r.ku, 6.0, 0.05 * 6.0);
  EXPECT_NEAR(r.tu, tu_exact, 0.05 * tu_exact);
  const std::size_t bound = static_cast<std::size_t>(std::ceil(std::log2((o.kp_hi - o.kp_lo) / o.tolerance)));
  EXPECT_LE(r.iterations, bound);
}

TEST(CriticalGain, RangeMissingTheCriticalGainFails) {
  TuningOptions o;
  o.kp_lo = 0.5;
  o.kp_hi = 3.0;
  EXPECT_THROW(find_critical_gain(reference_plant_loop(), o), TuningError);
}

TEST(CriticalGain, Deterministic) {
  TuningOptions o;
  o.kp_hi = 20.0;
  OscillationReport a = find_critical_gain(reference_plant_loop(), o);
  OscillationReport b = find_critical_gain(reference_plant_loop(), o);
  EXPECT_EQ(a.ku, b.ku);
  EXPECT_EQ(a.tu, b.tu);
  EXPECT_EQ(a.critical_trace, b.critical_trace);
}
