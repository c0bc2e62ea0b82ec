#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lfl/plant.hpp"
#include "lfl/track.hpp"

using namespace lfl;

namespace {

double analytic_length(const Track& t) {
  double sum = 0.0;
  for (const auto& s : t.segments) {
    if (auto* st = std::get_if<StraightSegment>(&s)) {
      sum += std::hypot(st->end.x - st->start.x, st->end.y - st->start.y);
    } else {
      const auto& a = std::get<ArcSegment>(s);
      sum += a.radius * std::abs(a.end_angle - a.start_angle);
    }
  }
  return sum;
}

}  // namespace

TEST(Track, SingleStraightLength) {
  Track t = load_track("straight 0 0 5 0\n");
  EXPECT_EQ(t.segments.size(), 1u);
  EXPECT_DOUBLE_EQ(t.length(), 5.0);
  EXPECT_FALSE(t.closed());
}

TEST(Track, ContinuityErrorNamesSegment) {
  try {
    load_track("straight 0 0 1 0\nstraight 1.001 0 2 0\n");
    FAIL() << "expected ContinuityError";
  } catch (const ContinuityError& e) {
    EXPECT_EQ(e.segment_number(), 2u);
  }
}

TEST(Track, ParseErrorsCarryLineNumbers) {
  try {
    load_track("straight 0 0 1 0\nbanana 1 2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(load_track("straight 0 0 x 0\n"), ParseError);
  EXPECT_THROW(load_track("arc 0 0 0.5 0 1 sideways\n"), ParseError);
}

TEST(Track, TightArcRejectedUnlessDisabled) {
  const char* doc = "arc 0 0 0.1 0 1 ccw\n";
  EXPECT_THROW(load_track(doc), ValidationError);
  EXPECT_NO_THROW(load_track(doc, TrackLoadOptions{0.0}));
}

TEST(Track, PaperCircuitLengthMatchesHandSum) {
  Track t = bundled_track("paper");
  // 5 + 0.5 + 4.75 of straights, quarter arcs of 0.5, 0.15, 0.3, 0.3 and a 0.275 half circle.
  const double hand = 10.25 + kPi * (0.25 + 0.075 + 0.3 + 0.275);
  EXPECT_NEAR(t.length(), hand, 1e-9);
  EXPECT_NEAR(t.length(), 13.0774, 1e-4);
  EXPECT_TRUE(t.closed());
}

TEST(Track, BundledTracksLoadAndRoundTrip) {
  for (const auto& name : bundled_track_names()) {
    Track t = bundled_track(name);
    EXPECT_NEAR(t.length(), analytic_length(t), 1e-9) << name;
    Track again = load_track(serialize_track(t));
    EXPECT_NEAR(again.length(), t.length(), 1e-12) << name;
    EXPECT_EQ(again.segments.size(), t.segments.size());
  }
  EXPECT_THROW(bundled_track("moon"), Error);
}

TEST(Reflectance, OnLineOffLineAndBoundary) {
  Track t = load_track("line_width 0.02\nreflect line 0.1 surface 0.9\nstraight 0 0 5 0\n");
  EXPECT_DOUBLE_EQ(reflectance_at(t, {1.0, 0.0}), 0.1);
  EXPECT_DOUBLE_EQ(reflectance_at(t, {1.0, 0.05}), 0.9);
  EXPECT_DOUBLE_EQ(reflectance_at(t, {1.0, 0.01}), 0.1);
  EXPECT_DOUBLE_EQ(reflectance_at(t, {1.0, -0.01}), 0.1);
}

TEST(Reflectance, CrossingOneEdgeChangesOnce) {
  Track t = bundled_track("straight");
  int changes = 0;
  double prev = reflectance_at(t, {2.0, -0.03});
  for (int i = 1; i <= 3000; ++i) {
    double v = reflectance_at(t, {2.0, -0.03 + i * 1e-5});
    if (v != prev) ++changes;
    prev = v;
  }
  EXPECT_EQ(changes, 1);
}

TEST(LateralError, SignAndMagnitude) {
  Track t = bundled_track("straight");
  EXPECT_NEAR(*lateral_error_cm(t, Pose{{1.0, 0.0}, 0.0}), 0.0, 1e-12);
  // Robot right of the line: the line lies to its left, positive error.
  EXPECT_NEAR(*lateral_error_cm(t, Pose{{1.0, -0.0118}, 0.0}), 1.18, 1e-9);
  EXPECT_NEAR(*lateral_error_cm(t, Pose{{1.0, 0.0118}, 0.0}), -1.18, 1e-9);
  EXPECT_FALSE(lateral_error_cm(t, Pose{{1.0, 1.5}, 0.0}).has_value());
}

TEST(LateralError, ArcCenterIsRadiusAway) {
  Track t = load_track("arc 0 0 0.15 0 1.5707963267948966 ccw\n");
  auto e = lateral_error_cm(t, Pose{{0.0, 0.0}, 0.0});
  ASSERT_TRUE(e);
  EXPECT_NEAR(std::abs(*e), 15.0, 1e-9);
}

TEST(LateralError, ZeroOnCenterlineEverywhere) {
  Track t = bundled_track("paper");
  for (double s = 0.0; s < t.length(); s += 0.0137) {
    Pose p = t.pose_at(s);
    auto e = lateral_error_cm(t, p);
    ASSERT_TRUE(e);
    EXPECT_NEAR(*e, 0.0, 1e-9) << "s=" << s;
  }
}

TEST(Raycast, DirectHitEmptyWorldAndCone) {
  Track t = bundled_track("straight");
  Pose mount{{1.0, 0.0}, 0.0};
  EXPECT_FALSE(raycast_obstacle(t, mount, 4.0, 0.0).has_value());

  t.obstacles.push_back({{1.25, 0.0}, 0.05, std::nullopt, std::nullopt});
  auto d = raycast_obstacle(t, mount, 4.0, 0.0);
  ASSERT_TRUE(d);
  EXPECT_NEAR(*d, 0.20, 1e-12);

  // 9.46 degrees off axis, outside the 7.5 degree half cone.
  Track side = bundled_track("straight");
  side.obstacles.push_back({{1.30, 0.05}, 0.001, std::nullopt, std::nullopt});
  EXPECT_FALSE(raycast_obstacle(side, mount, 4.0, 0.0).has_value());
}

TEST(Raycast, RespectsPresenceWindow) {
  Track t = bundled_track("straight");
  t.obstacles.push_back({{1.5, 0.0}, 0.05, 2.0, 4.0});
  Pose mount{{1.0, 0.0}, 0.0};
  EXPECT_FALSE(raycast_obstacle(t, mount, 4.0, 1.0));
  EXPECT_TRUE(raycast_obstacle(t, mount, 4.0, 3.0));
  EXPECT_FALSE(raycast_obstacle(t, mount, 4.0, 5.0));
}

TEST(Raycast, NeverExceedsMaxRange) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Track t = bundled_track("straight");
  for (int i = 0; i < 30; ++i) t.obstacles.push_back({{4.0 + 3.0 * u(rng), 0.5 * u(rng)}, 0.05, {}, {}});
  for (int i = 0; i < 2000; ++i) {
    double r = 0.1 + 1.9 * (u(rng) + 1.0) / 2.0;
    Pose mount{{4.0 + 3.0 * u(rng), 0.5 * u(rng)}, kPi * u(rng)};
    auto d = raycast_obstacle(t, mount, r, 0.0);
    if (d) {
      EXPECT_LE(*d, r);
    }
  }
}
