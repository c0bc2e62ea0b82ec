#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "lfl/plant.hpp"
#include "lfl/supervisor.hpp"

using namespace lfl;

namespace {

constexpr double kDt = 0.05;

SupervisorStep step(const SupervisorState& s, SupervisorInputs in, const SupervisorConfig& c = {}) {
  return fsm_step(s, in, kDt, c);
}

SupervisorState in_mode(Mode m) {
  SupervisorState s;
  s.mode = m;
  return s;
}

}  // namespace

TEST(Fsm, FollowToDetectOnConfirmation) {
  SupervisorStep r = step({}, {true, 0.15, true, false});
  EXPECT_EQ(r.state.mode, Mode::kDetect);
  ASSERT_TRUE(r.transition);
  EXPECT_EQ(r.transition->from, Mode::kFollow);
  EXPECT_EQ(r.directive.kind, DirectiveKind::kHoldPid);
}

TEST(Fsm, DetectRejectsOnClearSample) {
  SupervisorStep r = step(in_mode(Mode::kDetect), {false, 0.25, true, false});
  EXPECT_EQ(r.state.mode, Mode::kFollow);
  r = step(in_mode(Mode::kDetect), {false, std::nullopt, true, false});
  EXPECT_EQ(r.state.mode, Mode::kFollow);
}

TEST(Fsm, DetectConfirmsOnSecondSample) {
  SupervisorStep r = step(in_mode(Mode::kDetect), {false, 0.15, true, false});
  EXPECT_EQ(r.state.mode, Mode::kDetect);
  EXPECT_EQ(r.state.detect_hits, 1);
  r = step(r.state, {false, 0.15, true, false});
  EXPECT_EQ(r.state.mode, Mode::kAvoid);
  EXPECT_EQ(r.state.avoid_phase, AvoidPhase::kStop);
}

TEST(Fsm, AvoidPhaseBoundaries) {
  SupervisorConfig c;
  SupervisorState s = in_mode(Mode::kAvoid);
  std::vector<AvoidPhase> phases;
  Mode mode = Mode::kAvoid;
  int ticks = 0;
  while (mode == Mode::kAvoid && ticks < 200) {
    phases.push_back(s.avoid_phase);
    SupervisorStep r = step(s, {false, std::nullopt, false, false}, c);
    s = r.state;
    mode = s.mode;
    ++ticks;
  }
  auto count = [&](AvoidPhase p) { return std::count(phases.begin(), phases.end(), p); };
  EXPECT_EQ(count(AvoidPhase::kStop), 20);
  EXPECT_EQ(count(AvoidPhase::kReverse), 10);
  EXPECT_EQ(count(AvoidPhase::kTurn), 20);
  // 0.10 m at 0.40 m/s.
  EXPECT_EQ(count(AvoidPhase::kForward), 5);
  EXPECT_EQ(mode, Mode::kRecover);
}

TEST(Fsm, AvoidRepeatsWhileObstaclePersists) {
  SupervisorState s = in_mode(Mode::kAvoid);
  s.avoid_phase = AvoidPhase::kForward;
  s.forward_travel = 0.099;
  SupervisorStep r = step(s, {false, 0.10, false, false});
  EXPECT_EQ(r.state.mode, Mode::kAvoid);
  EXPECT_EQ(r.state.avoid_phase, AvoidPhase::kStop);
}

TEST(Fsm, RecoverTimesOutToSearch) {
  SupervisorState s = in_mode(Mode::kRecover);
  int ticks = 0;
  while (s.mode == Mode::kRecover) {
    s = step(s, {false, std::nullopt, false, false}).state;
    ++ticks;
  }
  EXPECT_EQ(s.mode, Mode::kSearch);
  EXPECT_EQ(ticks, 100);
}

TEST(Fsm, RecoverAndSearchReturnOnLine) {
  EXPECT_EQ(step(in_mode(Mode::kRecover), {false, std::nullopt, true, false}).state.mode, Mode::kFollow);
  EXPECT_EQ(step(in_mode(Mode::kSearch), {false, std::nullopt, true, false}).state.mode, Mode::kFollow);
  EXPECT_EQ(step(in_mode(Mode::kSearch), {false, std::nullopt, false, false}).state.mode, Mode::kSearch);
}

TEST(Fsm, LostLineEntersSearchTowardLastSide) {
  SupervisorConfig c;
  SupervisorStep r = step({}, {false, std::nullopt, false, true, -1}, c);
  EXPECT_EQ(r.state.mode, Mode::kSearch);
  EXPECT_TRUE(r.state.search_clockwise);
  EXPECT_TRUE(r.directive.command.reverse_right);
  EXPECT_FALSE(r.directive.command.reverse_left);

  r = step({}, {false, std::nullopt, false, true, 1}, c);
  EXPECT_FALSE(r.state.search_clockwise);
  EXPECT_TRUE(r.directive.command.reverse_left);
}

TEST(Fsm, ConfirmationOutranksLoss) {
  EXPECT_EQ(step({}, {true, 0.1, false, true}).state.mode, Mode::kDetect);
}

TEST(Spiral, RadiusSchedule) {
  SupervisorConfig c;
  EXPECT_DOUBLE_EQ(spiral_radius(0.0, c), 0.05);
  EXPECT_DOUBLE_EQ(spiral_radius(2.5, c), 0.175);
  EXPECT_DOUBLE_EQ(spiral_radius(5.0, c), 0.30);
  EXPECT_DOUBLE_EQ(spiral_radius(9.0, c), 0.30);
}

TEST(Spiral, CommandTurnsClockwiseAndWidens) {
  SupervisorConfig c;
  MotorCommand a = spiral_command(0.0, c), b = spiral_command(5.0, c);
  auto signed_speed = [&](int pwm, bool rev) { return (rev ? -1.0 : 1.0) * pwm_to_speed(pwm, c.dead_zone); };
  double wa = signed_speed(a.pwm_left, a.reverse_left) - signed_speed(a.pwm_right, a.reverse_right);
  double wb = signed_speed(b.pwm_left, b.reverse_left) - signed_speed(b.pwm_right, b.reverse_right);
  EXPECT_GT(wa, 0.0);
  EXPECT_GT(wb, 0.0);
  EXPECT_GT(wa, wb);
}

TEST(Fsm, EveryReachableStateHasADirective) {
  SupervisorConfig c;
  for (Mode m : {Mode::kFollow, Mode::kDetect, Mode::kAvoid, Mode::kRecover, Mode::kSearch}) {
    for (AvoidPhase p : {AvoidPhase::kStop, AvoidPhase::kReverse, AvoidPhase::kTurn, AvoidPhase::kForward}) {
      SupervisorState s = in_mode(m);
      s.avoid_phase = p;
      ActuationDirective d = directive_for(s, c);
      if (m == Mode::kFollow) {
        EXPECT_EQ(d.kind, DirectiveKind::kDelegatePid);
      }
      if (m == Mode::kAvoid || m == Mode::kRecover || m == Mode::kSearch) {
        EXPECT_EQ(d.kind, DirectiveKind::kManeuver);
      }
      EXPECT_LE(d.command.pwm_left, 255);
      EXPECT_LE(d.command.pwm_right, 255);
    }
    EXPECT_EQ(mode_from_name(mode_name(m)), m);
  }
}

TEST(Fsm, ReplayIsBitExact) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> d(0.05, 0.5);
  std::bernoulli_distribution coin(0.3);
  std::vector<SupervisorInputs> inputs;
  for (int i = 0; i < 5000; ++i) {
    std::optional<double> dist;
    if (coin(rng)) dist = d(rng);
    inputs.push_back({coin(rng), dist, coin(rng), coin(rng) && coin(rng), coin(rng) ? 1 : -1});
  }
  auto trace = [&] {
    std::vector<SupervisorState> out;
    SupervisorState s;
    for (const auto& in : inputs) {
      s = step(s, in).state;
      out.push_back(s);
    }
    return out;
  };
  auto a = trace(), b = trace();
  EXPECT_EQ(a, b);
  // Every mode is visited by a random input trace.
  for (Mode m : {Mode::kFollow, Mode::kDetect, Mode::kAvoid, Mode::kRecover, Mode::kSearch}) {
    EXPECT_TRUE(std::any_of(a.begin(), a.end(), [&](const SupervisorState& s) { return s.mode == m; }))
        << mode_name(m);
  }
}

TEST(Fsm, DetectResolvesWithinTwoSamples) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(0.05, 0.4);
  SupervisorState s;
  int in_detect = 0;
  for (int i = 0; i < 20000; ++i) {
    s = step(s, {d(rng) < 0.2, d(rng), true, false}).state;
    in_detect = s.mode == Mode::kDetect ? in_detect + 1 : 0;
    EXPECT_LE(in_detect, 2);
  }
}
