#include "dualgk/models.hpp"
#include "dualgk/quadrotor.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dualgk;

namespace
{

QuadParams quiet_params()
{
  QuadParams p;
  p.disturbance_bound = 0.0;
  return p;
}

}  // namespace

TEST(Models, HoverAtRestHasZeroAcceleration)
{
  ModelSpec m = make_drag_quadrotor(quiet_params(), 0.3);
  Vec x = vec({1, 2, 3, 0, 0, 0});
  Vec r = eval_dynamics(m, x, hover_input(quiet_params()), vec({0.77}), Vec::Zero(6));
  EXPECT_EQ(r.norm(), 0.0);
}

TEST(Models, DragTermHandEvaluated)
{
  ModelSpec m = make_drag_quadrotor(quiet_params(), 0.3);
  Vec x = vec({0, 0, 0, 1, 0, 0});
  Vec r = eval_dynamics(m, x, vec({0, 0, 0}), vec({0.3}), Vec::Zero(6));
  EXPECT_DOUBLE_EQ(r(0), 1.0);
  EXPECT_DOUBLE_EQ(r(3), -0.3);
  EXPECT_DOUBLE_EQ(r(4), 0.0);
  EXPECT_DOUBLE_EQ(r(5), -9.81);
}

TEST(Models, ZeroThetaGivesNominalDynamics)
{
  ModelSpec m = make_vector_drag_quadrotor(quiet_params(), 0.15, 0.3);
  Vec x = vec({0.3, -1, 2, 1.5, -0.7, 0.2});
  Vec u = vec({0.4, -0.1, 9.0});
  Vec expected = m.f0(x) + m.g0(x) * u;
  Vec r = eval_dynamics(m, x, u, vec({0.0, 0.0}), Vec::Zero(6));
  EXPECT_EQ((r - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Models, DimensionMismatchThrows)
{
  ModelSpec m = make_drag_quadrotor(quiet_params(), 0.3);
  EXPECT_THROW(eval_dynamics(m, Vec::Zero(5), Vec::Zero(3), vec({0.1}), Vec::Zero(6)), ContractViolation);
  EXPECT_THROW(eval_dynamics(m, Vec::Zero(6), Vec::Zero(3), vec({0.1, 0.2}), Vec::Zero(6)), ContractViolation);
}

TEST(Models, FusedRateMatchesSplitForm)
{
  ModelSpec m = make_vector_drag_quadrotor(quiet_params(), 0.15, 0.3);
  Rng rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    Vec x(6), in(3), th(2);
    for (int i = 0; i < 6; ++i) x(i) = u(rng);
    for (int i = 0; i < 3; ++i) in(i) = u(rng);
    th << std::abs(u(rng)), std::abs(u(rng));
    Vec split = eval_dynamics(m, x, in, th, Vec::Zero(6));
    EXPECT_LT((m.fused_rate(x, in, th) - split).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Models, Rk4MatchesExponentialDecay)
{
  ModelSpec m = make_decay_model();
  Vec x1 = integrate_step(m, vec({1.0}), vec({0.0}), vec({0.0}), vec({0.0}), 0.1);
  EXPECT_NEAR(x1(0), std::exp(-0.1), 1e-6);
  EXPECT_NEAR(x1(0), 0.904837, 1e-6);
}

TEST(Models, Rk4LocalErrorShrinksSixteenfoldGlobally)
{
  ModelSpec m = make_decay_model();
  auto err = [&](double dt) {
    Vec x = vec({1.0});
    int n = static_cast<int>(std::llround(1.0 / dt));
    for (int k = 0; k < n; ++k) x = integrate_step(m, x, vec({0}), vec({0}), vec({0}), dt);
    return std::abs(x(0) - std::exp(-1.0));
  };
  double ratio = err(0.1) / err(0.05);
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
}

TEST(Models, NonFiniteStateRaisesBlowup)
{
  ModelSpec m = make_decay_model();
  EXPECT_THROW(integrate_step(m, vec({1.0}), vec({0}), vec({std::nan("")}), vec({0}), 0.1), NumericalBlowup);
  EXPECT_THROW(integrate_step(m, vec({1.0}), vec({0}), vec({0}), vec({0}), 0.0), ContractViolation);
}

TEST(Models, HoverFromRestStaysConstant)
{
  QuadParams p = quiet_params();
  ModelSpec m = make_drag_quadrotor(p, 0.3);
  Vec x0 = vec({1, 1, 2, 0, 0, 0});
  Policy hover = [&](double, const Vec &) { return hover_input(p); };
  Trajectory tr = simulate_closed_loop(m, hover, x0, {0.0, 2.0}, m.true_theta, 7);
  ASSERT_EQ(tr.size(), 101u);
  for (const auto & s : tr.states) EXPECT_EQ((s - x0).norm(), 0.0);
}

TEST(Models, SimulationIsDeterministicPerSeed)
{
  QuadParams p;
  p.disturbance_bound = 0.05;
  ModelSpec m = make_drag_quadrotor(p, 0.3);
  Policy pol = [](double t, const Vec &) { return vec({std::sin(t), 0.5, 9.81}); };
  Vec x0 = vec({0, 0, 2, 0, 0, 0});
  Trajectory a = simulate_closed_loop(m, pol, x0, {0.0, 1.0}, m.true_theta, 11);
  Trajectory b = simulate_closed_loop(m, pol, x0, {0.0, 1.0}, m.true_theta, 11);
  Trajectory c = simulate_closed_loop(m, pol, x0, {0.0, 1.0}, m.true_theta, 12);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.states[k], b.states[k]);
    differs = differs || (a.states[k] != c.states[k]);
  }
  EXPECT_TRUE(differs);
}

TEST(Models, DisturbanceSamplesRespectBound)
{
  QuadParams p;
  p.disturbance_bound = 0.37;
  ModelSpec m = make_drag_quadrotor(p, 0.3);
  Rng rng(5);
  for (int k = 0; k < 5000; ++k) {
    Vec w = sample_disturbance(m, rng);
    EXPECT_LE(w.cwiseAbs().maxCoeff(), 0.37);
  }
}

TEST(Models, InputsAreClippedToBounds)
{
  QuadParams p = quiet_params();
  ModelSpec m = make_drag_quadrotor(p, 0.0);
  Policy wild = [](double, const Vec &) { return vec({100, -100, 100}); };
  Trajectory tr = simulate_closed_loop(m, wild, vec({0, 0, 2, 0, 0, 0}), {0.0, 0.1}, m.true_theta, 1);
  for (const auto & u : tr.inputs) EXPECT_TRUE(m.input_bounds.contains(u));
  Policy bad = [](double, const Vec &) { return vec({std::nan(""), 0, 9.81}); };
  EXPECT_THROW(simulate_closed_loop(m, bad, vec({0, 0, 2, 0, 0, 0}), {0.0, 0.1}, m.true_theta, 1), PolicyFailure);
}

TEST(Models, OpenLoopReplayReproducesPlan)
{
  QuadParams p = quiet_params();
  ModelSpec m = make_drag_quadrotor(p, 0.3);
  Policy pol = [](double t, const Vec & x) { return vec({1.0 - x(3), std::cos(t), 9.81 + 0.2}); };
  Vec x0 = vec({0, 0, 2, 0, 0, 0});
  Trajectory plan = simulate_closed_loop(m, pol, x0, {0.0, 2.0}, vec({0.25}), 1);
  Trajectory replay = simulate_closed_loop(m, open_loop_policy(plan), x0, {0.0, 2.0}, vec({0.25}), 2);
  ASSERT_EQ(plan.size(), replay.size());
  for (std::size_t k = 0; k < plan.size(); ++k) EXPECT_LT((plan.states[k] - replay.states[k]).norm(), 1e-12);
}

TEST(Models, RegressionTupleConstantRegressor)
{
  ModelSpec m = make_decay_model();
  m.true_theta = vec({0.7});
  Policy zero = [](double, const Vec &) { return vec({0.0}); };
  Trajectory tr = simulate_closed_loop(m, zero, vec({1.0}), {0.0, 1.0}, m.true_theta, 0);
  RegressionTuple t = make_regression_tuple(m, tr, 1.0, 0.5);
  // Phi = 1 constant: F = window, and Y ~= window * theta up to trapezoid error.
  EXPECT_NEAR(t.F(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(t.Y(0), 0.5 * 0.7, 2e-3);
  EXPECT_THROW(make_regression_tuple(m, tr, 1.0, 0.0), ContractViolation);
  EXPECT_THROW(make_regression_tuple(m, tr, 1.0, 1.5), InsufficientData);
}

TEST(Models, DragRegressorColumnMatchesRefinedQuadrature)
{
  QuadParams p = quiet_params();
  ModelSpec m = make_drag_quadrotor(p, 0.3);
  Policy push = [](double, const Vec &) { return vec({3.0, 0.0, 9.81}); };
  Vec x0 = vec({0, 0, 2, 0.5, 0, 0});
  Trajectory coarse = simulate_closed_loop(m, push, x0, {0.0, 1.0}, m.true_theta, 0);
  RegressionTuple t = make_regression_tuple(m, coarse, 1.0, 1.0);
  // Oracle: same motion on a 10x finer grid.
  ModelSpec fine_model = m;
  fine_model.dt = m.dt / 10.0;
  Trajectory fine = simulate_closed_loop(fine_model, push, x0, {0.0, 1.0}, m.true_theta, 0);
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < fine.size(); ++k) {
    double a = fine.states[k](3) * std::abs(fine.states[k](3));
    double b = fine.states[k + 1](3) * std::abs(fine.states[k + 1](3));
    integral += 0.5 * (fine.times[k + 1] - fine.times[k]) * (a + b);
  }
  EXPECT_NEAR(t.F(3, 0), -integral, 1e-4 * std::abs(integral));
  EXPECT_EQ(t.F(0, 0), 0.0);
  // Noise-free identity Y = F theta holds to quadrature tolerance, which shrinks on the finer grid.
  RegressionTuple tf = make_regression_tuple(fine_model, fine, 1.0, 1.0);
  double coarse_res = (t.Y - t.F * m.true_theta).cwiseAbs().maxCoeff();
  double fine_res = (tf.Y - tf.F * m.true_theta).cwiseAbs().maxCoeff();
  EXPECT_LT(coarse_res, 1e-4);
  EXPECT_LT(fine_res, coarse_res / 50.0);
}

TEST(Models, LipIdentityForQuadrotorModels)
{
  QuadParams p = quiet_params();
  Rng rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (const ModelSpec & m : {make_drag_quadrotor(p, 0.3), make_vector_drag_quadrotor(p, 0.15, 0.3)}) {
    for (int k = 0; k < 1000; ++k) {
      Vec x(6), in(3), th(m.param_dim);
      for (int i = 0; i < 6; ++i) x(i) = u(rng);
      for (int i = 0; i < 3; ++i) in(i) = u(rng);
      for (int i = 0; i < m.param_dim; ++i) th(i) = std::abs(u(rng));
      Vec lhs = eval_dynamics(m, x, in, th, Vec::Zero(6)) - eval_dynamics(m, x, in, Vec::Zero(m.param_dim), Vec::Zero(6));
      Vec rhs = m.regressor(x, in) * th;
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Models, QuadratureMarginIsSmallAndPositive)
{
  QuadParams p = quiet_params();
  ModelSpec m = make_drag_quadrotor(p, 0.3);
  Policy push = [](double t, const Vec &) { return vec({3.0 * std::sin(2 * t), 2.0, 9.81}); };
  double margin = estimate_quadrature_margin(m, push, vec({0, 0, 2, 0, 0, 0}), 3.0, {vec({0.0}), vec({0.5})}, 0.2);
  EXPECT_GT(margin, 0.0);
  EXPECT_LT(margin, 1e-3);
}
