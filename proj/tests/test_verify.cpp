#include "dualgk/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dualgk;

namespace
{

// xdot = -x + theta: the state relaxes toward theta.
struct DecaySetup
{
  ModelSpec model = make_decay_model();
  Policy zero = [](double, const Vec &) { return vec({0.0}); };
  FallbackSpec fb;
  SafetyConstraints cons;

  explicit DecaySetup(double x_max, double fb_radius)
  {
    fb.policy = zero;
    fb.T_fb = 4.0;
    fb.fallback_set = [fb_radius](const Vec & x) { return std::abs(x(0)) <= fb_radius; };
    cons.state_admissible = [x_max](const Vec & x) { return std::abs(x(0)) <= x_max; };
    cons.inputs = {vec({-1.0}), vec({1.0})};
  }
};

}  // namespace

TEST(Verify, ThresholdArithmetic)
{
  EXPECT_TRUE(verdict_accepts(95, 100, 0.1));
  EXPECT_FALSE(verdict_accepts(95, 100, 0.01));
  EXPECT_TRUE(verdict_accepts(190, 200, 0.05));
  EXPECT_FALSE(verdict_accepts(189, 200, 0.05));
  EXPECT_TRUE(verdict_accepts(100, 100, 1e-9));
}

TEST(Verify, AcceptanceMonotoneInRiskTolerance)
{
  for (int n_safe = 0; n_safe <= 50; ++n_safe) {
    bool prev = false;
    for (double delta = 0.001; delta < 1.0; delta += 0.01) {
      const bool acc = verdict_accepts(n_safe, 50, delta);
      EXPECT_TRUE(!prev || acc);
      prev = acc;
    }
  }
}

TEST(Verify, PointBoxNoDisturbanceIsDeterministicPass)
{
  DecaySetup d(2.0, 1.5);
  SafetyVerdict v = verify_policy(
    d.model, d.zero, 1.0, vec({1.0}), 0.0, ParameterBox(vec({0.5}), vec({0.5})), d.fb, d.cons, 200, 0.05, 3);
  EXPECT_EQ(v.n_rollouts, 200);
  EXPECT_EQ(v.n_safe, 200);
  EXPECT_EQ(v.p_safe, 1.0);
  EXPECT_TRUE(v.accepted);
}

TEST(Verify, WideBoxFailsAboutHalf)
{
  // From x = 0 the state reaches theta (1 - e^{-5}) after 5 s; it violates x <= 1 iff theta > 1/(1 - e^{-5}).
  DecaySetup d(1.0, 10.0);
  const double theta_crit = 1.0 / (1.0 - std::exp(-5.0));
  const double p_expected = (theta_crit - 0.0) / 2.0;
  SafetyVerdict v = verify_policy(
    d.model, d.zero, 1.0, vec({0.0}), 0.0, ParameterBox(vec({0.0}), vec({2.0})), d.fb, d.cons, 2000, 0.05, 17);
  EXPECT_NEAR(v.p_safe, p_expected, 0.04);
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.failure_modes.state_constraint, v.n_rollouts - v.n_safe);
  EXPECT_EQ(v.failure_modes.input_constraint, 0);
}

TEST(Verify, SeedDeterminism)
{
  DecaySetup d(1.0, 10.0);
  const ParameterBox box(vec({0.0}), vec({2.0}));
  SafetyVerdict a = verify_policy(d.model, d.zero, 1.0, vec({0.0}), 0.0, box, d.fb, d.cons, 300, 0.05, 8);
  SafetyVerdict b = verify_policy(d.model, d.zero, 1.0, vec({0.0}), 0.0, box, d.fb, d.cons, 300, 0.05, 8);
  EXPECT_EQ(a.n_safe, b.n_safe);
  EXPECT_EQ(a.p_safe, b.p_safe);
}

TEST(Verify, TerminalFallbackSetCounted)
{
  DecaySetup d(10.0, 0.5);
  SafetyVerdict v = verify_policy(
    d.model, d.zero, 1.0, vec({0.0}), 0.0, ParameterBox(vec({0.6}), vec({0.8})), d.fb, d.cons, 50, 0.05, 1);
  EXPECT_EQ(v.n_safe, 0);
  EXPECT_EQ(v.failure_modes.terminal_fallback_set, 50);
  EXPECT_EQ(v.failure_modes.state_constraint, 0);
}

TEST(Verify, InputConstraintCounted)
{
  DecaySetup d(10.0, 10.0);
  Policy loud = [](double, const Vec &) { return vec({2.0}); };
  SafetyVerdict v = verify_policy(
    d.model, loud, 1.0, vec({0.0}), 0.0, ParameterBox(vec({0.0}), vec({0.1})), d.fb, d.cons, 40, 0.05, 1);
  EXPECT_EQ(v.n_safe, 0);
  EXPECT_EQ(v.failure_modes.input_constraint, 40);
}

TEST(Verify, CostIsMeanOverRollouts)
{
  DecaySetup d(10.0, 10.0);
  RolloutCost final_state = [](const Trajectory & t) { return t.states.back()(0); };
  SafetyVerdict v = verify_policy(
    d.model, d.zero, 1.0, vec({1.0}), 0.0, ParameterBox(vec({0.0}), vec({0.0})), d.fb, d.cons, 20, 0.05, 1,
    final_state);
  EXPECT_NEAR(v.mean_cost, std::exp(-5.0), 2e-3);
}

TEST(Verify, EarlyRejectStopsAndMatchesFullVerdict)
{
  DecaySetup d(1.0, 10.0);
  const ParameterBox box(vec({0.0}), vec({2.0}));
  SafetyVerdict full = verify_policy(d.model, d.zero, 1.0, vec({0.0}), 0.0, box, d.fb, d.cons, 200, 0.05, 5);
  SafetyVerdict early =
    verify_policy(d.model, d.zero, 1.0, vec({0.0}), 0.0, box, d.fb, d.cons, 200, 0.05, 5, nullptr, true);
  EXPECT_FALSE(full.accepted);
  EXPECT_FALSE(early.accepted);
  EXPECT_LT(early.n_rollouts, 200);
  EXPECT_GT(early.n_rollouts - early.n_safe, 200 - 190);

  SafetyVerdict pass = verify_policy(
    d.model, d.zero, 1.0, vec({0.0}), 0.0, ParameterBox(vec({0.1}), vec({0.5})), d.fb, d.cons, 200, 0.05, 5,
    nullptr, true);
  EXPECT_TRUE(pass.accepted);
  EXPECT_EQ(pass.n_rollouts, 200);
}
