#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "lfl/error.hpp"
#include "lfl/stats.hpp"

using namespace lfl;

TEST(IncompleteBeta, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 24.5, 49.0}) {
    for (double b : {0.5, 1.0, 3.0, 40.0}) {
      for (double x : {0.0, 1e-6, 0.1, 0.5, 0.77, 0.999, 1.0}) {
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12)
            << a << " " << b << " " << x;
      }
    }
  }
}

TEST(StudentT, SurvivalAndQuantileMatchBoost) {
  for (double df : {1.0, 2.0, 5.0, 29.0, 49.0, 98.0, 62.86}) {
    boost::math::students_t dist(df);
    for (double t : {-30.0, -3.0, -0.5, 0.0, 0.7, 2.0, 5.0, 16.9}) {
      double want = boost::math::cdf(boost::math::complement(dist, t));
      EXPECT_NEAR(student_t_sf(t, df), want, 1e-12 + 1e-9 * want) << df << " " << t;
      EXPECT_NEAR(student_t_cdf(t, df) + student_t_sf(t, df), 1.0, 1e-14);
    }
    for (double p : {0.025, 0.5, 0.9, 0.975}) {
      EXPECT_NEAR(student_t_quantile(p, df), boost::math::quantile(dist, p), 1e-8) << df << " " << p;
    }
  }
  EXPECT_NEAR(student_t_quantile(0.975, 49.0), 2.0096, 1e-4);
}

TEST(Summarize, Examples) {
  std::vector<double> ones{1, 1, 1};
  SampleSummary s = summarize(ones);
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
  EXPECT_DOUBLE_EQ(s.std, 0.0);
  EXPECT_DOUBLE_EQ(s.ci_low, 1.0);
  EXPECT_DOUBLE_EQ(s.ci_high, 1.0);

  std::vector<double> pair{0, 2};
  s = summarize(pair);
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(s.min, 0.0);
  EXPECT_DOUBLE_EQ(s.max, 2.0);

  std::vector<double> single{3.5};
  s = summarize(single);
  EXPECT_DOUBLE_EQ(s.std, 0.0);
  EXPECT_DOUBLE_EQ(s.ci_low, 3.5);
  EXPECT_DOUBLE_EQ(s.ci_high, 3.5);

  EXPECT_THROW(summarize(std::vector<double>{}), ValidationError);
}

TEST(Summarize, TextbookIntervalForFiftySamples) {
  // Build 50 values with mean 1.18 and sample std 0.34 exactly.
  std::vector<double> v;
  for (int i = 0; i < 25; ++i) {
    v.push_back(-1.0);
    v.push_back(1.0);
  }
  const double scale = 0.34 / std::sqrt(50.0 / 49.0);
  for (double& x : v) x = 1.18 + scale * x;
  SampleSummary s = summarize(v);
  EXPECT_NEAR(s.mean, 1.18, 1e-12);
  EXPECT_NEAR(s.std, 0.34, 1e-12);
  EXPECT_NEAR(s.ci_low, 1.083, 5e-4);
  EXPECT_NEAR(s.ci_high, 1.277, 5e-4);
}

TEST(Summarize, OrderingHolds) {
  std::mt19937_64 rng(6);
  std::lognormal_distribution<double> d(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(2 + i % 30);
    for (double& x : v) x = d(rng);
    SampleSummary s = summarize(v);
    EXPECT_GE(s.std, 0.0);
    EXPECT_LE(s.min, s.mean);
    EXPECT_LE(s.mean, s.max);
    EXPECT_LE(s.ci_low, s.mean);
    EXPECT_GE(s.ci_high, s.mean);
  }
}

TEST(TTest, IdenticalSamples) {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  TTestResult r = t_test(a, a);
  EXPECT_DOUBLE_EQ(r.t, 0.0);
  EXPECT_DOUBLE_EQ(r.p_one_tailed, 0.5);
  EXPECT_DOUBLE_EQ(r.cohens_d, 0.0);
  EXPECT_DOUBLE_EQ(r.df, 6.0);
}

TEST(TTest, PooledDegreesOfFreedomAndSeededEffect) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> da(2.08, 0.52), db(1.18, 0.34);
  // (2.08 - 1.18) / sqrt((0.52^2 + 0.34^2) / 2) = 2.05 for the populations;
  // one draw of 50 + 50 scatters around it, the replicate mean does not.
  double d_sum = 0.0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> a(50), b(50);
    for (double& x : a) x = da(rng);
    for (double& x : b) x = db(rng);
    TTestResult r = t_test(a, b);
    ASSERT_EQ(r.df, 98.0);
    ASSERT_LT(r.p_one_tailed, 0.001);
    ASSERT_NEAR(r.p_two_tailed, 2.0 * r.p_one_tailed, 1e-15);
    d_sum += r.cohens_d;
  }
  EXPECT_NEAR(d_sum / reps, 2.05, 0.06);
}

TEST(TTest, ClosedFormPooledArithmetic) {
  std::vector<double> a{3, 4, 5, 8}, b{1, 2, 2, 3, 5};
  // means 5 and 2.6; variances 14/3 and 2.3; pooled (14 + 9.2) / 7.
  const double sp = std::sqrt(23.2 / 7.0);
  const double t = 2.4 / (sp * std::sqrt(1.0 / 4 + 1.0 / 5));
  TTestResult r = t_test(a, b);
  EXPECT_NEAR(r.t, t, 1e-12);
  EXPECT_NEAR(r.cohens_d, 2.4 / sp, 1e-12);
  boost::math::students_t dist(7.0);
  EXPECT_NEAR(r.p_one_tailed, boost::math::cdf(boost::math::complement(dist, t)), 1e-12);

  TTestResult w = t_test(a, b, TTestKind::kWelch);
  const double va = 14.0 / 3 / 4, vb = 2.3 / 5;
  EXPECT_NEAR(w.t, 2.4 / std::sqrt(va + vb), 1e-12);
  EXPECT_NEAR(w.df, (va + vb) * (va + vb) / (va * va / 3 + vb * vb / 4), 1e-12);
}

TEST(TTest, SwappingSamplesMirrors) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> a(10), b(14);
    for (double& x : a) x = n(rng) + 0.3;
    for (double& x : b) x = n(rng);
    TTestResult ab = t_test(a, b), ba = t_test(b, a);
    EXPECT_NEAR(ab.t, -ba.t, 1e-12);
    EXPECT_NEAR(ab.cohens_d, -ba.cohens_d, 1e-12);
    EXPECT_NEAR(ab.p_one_tailed, 1.0 - ba.p_one_tailed, 1e-12);
  }
}

TEST(TTest, DegenerateVarianceIsCapped) {
  std::vector<double> a{0, 0}, b{1, 1};
  TTestResult r = t_test(b, a);
  EXPECT_TRUE(r.capped);
  EXPECT_EQ(r.t, kStatCap);
  EXPECT_EQ(r.p_one_tailed, 0.0);
  EXPECT_TRUE(std::isfinite(r.cohens_d));
  EXPECT_THROW(t_test(std::vector<double>{1.0}, b), ValidationError);
}
