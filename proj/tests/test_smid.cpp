#include "dualgk/quadrotor.hpp"
#include "dualgk/smid.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dualgk;

namespace
{

RegressionTuple tuple(std::initializer_list<double> Y, std::initializer_list<std::initializer_list<double>> F)
{
  RegressionTuple t;
  t.Y = vec(Y);
  t.F = Mat::Zero(static_cast<Eigen::Index>(F.size()), static_cast<Eigen::Index>(F.begin()->size()));
  Eigen::Index r = 0;
  for (const auto & row : F) {
    Eigen::Index c = 0;
    for (double v : row) t.F(r, c++) = v;
    ++r;
  }
  t.window = {0.0, 1.0};
  return t;
}

}  // namespace

TEST(Smid, EmptyStackAdmitsAnyFiniteTuple)
{
  HistoryStack s;
  EXPECT_TRUE(try_admit(s, tuple({1.0}, {{0.0}})));
  EXPECT_EQ(s.tuples.size(), 1u);
}

TEST(Smid, DuplicateTupleRejected)
{
  HistoryStack s;
  auto t = tuple({1.0, 2.0}, {{1.0, 0.0}, {0.0, 0.5}});
  EXPECT_TRUE(try_admit(s, t));
  EXPECT_FALSE(try_admit(s, t));
  EXPECT_EQ(s.tuples.size(), 1u);
}

TEST(Smid, OrthogonalTuplesBothAdmitted)
{
  HistoryStack s;
  EXPECT_TRUE(try_admit(s, tuple({1.0}, {{1.0, 0.0}})));
  EXPECT_TRUE(try_admit(s, tuple({1.0}, {{0.0, 1.0}})));
  Mat G = gram_matrix(s.tuples, 2);
  // Oracle: Gram is the identity, eigenvalues {1, 1}.
  EXPECT_NEAR(min_eigenvalue(G), 1.0, 1e-12);
}

TEST(Smid, UnexcitingTupleRejectedOnceFilled)
{
  HistoryStack s;
  s.min_fill = 1;
  EXPECT_TRUE(try_admit(s, tuple({1.0}, {{1.0}})));
  EXPECT_FALSE(try_admit(s, tuple({0.3}, {{1e-4}})));
  EXPECT_TRUE(try_admit(s, tuple({0.3}, {{0.5}})));
}

TEST(Smid, FullStackReplacesLeastInformativeTuple)
{
  HistoryStack s;
  s.capacity = 3;
  try_admit(s, tuple({0.0}, {{1.0}}));
  try_admit(s, tuple({0.0}, {{2.0}}));
  try_admit(s, tuple({0.0}, {{0.1}}));
  ASSERT_EQ(s.tuples.size(), 3u);
  EXPECT_TRUE(try_admit(s, tuple({0.0}, {{3.0}})));
  ASSERT_EQ(s.tuples.size(), 3u);
  for (const auto & t : s.tuples) EXPECT_NE(t.F(0, 0), 0.1);
  EXPECT_FALSE(try_admit(s, tuple({0.0}, {{0.5}})));
}

TEST(Smid, FiniteExcitationCheck)
{
  HistoryStack s;
  EXPECT_FALSE(check_fe(s, 0.5));
  s.tuples.push_back(tuple({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}));
  EXPECT_TRUE(check_fe(s, 0.5));
  HistoryStack only_first;
  only_first.tuples.push_back(tuple({0.0}, {{3.0, 0.0}}));
  only_first.tuples.push_back(tuple({0.0}, {{-1.0, 0.0}}));
  EXPECT_FALSE(check_fe(only_first, 1e-9));
  EXPECT_THROW(check_fe(s, 0.0), ContractViolation);
}

TEST(Smid, InactiveConstraintsLeaveBoxUnchanged)
{
  ParameterBox box(vec({0.0}), vec({2.0}));
  HistoryStack s;
  s.tuples.push_back(tuple({1.0}, {{0.5}}));
  // max |Y - F theta| over the box is 1.0.
  ParameterBox out = smid_update(box, s, 1.0 + 1e-6);
  EXPECT_EQ(out.lo(0), 0.0);
  EXPECT_EQ(out.hi(0), 2.0);
}

TEST(Smid, ScalarHandSolvedUpdate)
{
  ParameterBox box(vec({0.0}), vec({2.0}));
  HistoryStack s;
  s.tuples.push_back(tuple({1.0}, {{1.0}}));
  ParameterBox out = smid_update(box, s, 0.1);
  EXPECT_NEAR(out.lo(0), 0.9, 1e-9);
  EXPECT_NEAR(out.hi(0), 1.1, 1e-9);
}

TEST(Smid, InconsistentDataKeepsBox)
{
  ParameterBox box(vec({0.0}), vec({2.0}));
  HistoryStack s;
  s.tuples.push_back(tuple({1.0}, {{1.0}}));
  s.tuples.push_back(tuple({1.5}, {{1.0}}));
  SmidOutcome out = smid_refine(box, s.tuples, 0.1);
  EXPECT_FALSE(out.consistent);
  EXPECT_EQ(out.box.lo(0), 0.0);
  EXPECT_EQ(out.box.hi(0), 2.0);
  // A violated theta-free row is also inconsistent.
  std::vector<RegressionTuple> free_row{tuple({0.5}, {{0.0}})};
  EXPECT_FALSE(smid_refine(box, free_row, 0.1).consistent);
}

TEST(Smid, CaseTwoStyleBoxShrinksOnBothCoordinates)
{
  QuadParams p;
  p.disturbance_bound = 0.01;
  ModelSpec m = make_vector_drag_quadrotor(p, 0.15, 0.3);
  ParameterBox box(vec({0.0, 0.0}), vec({0.5, 0.8}));
  Policy pol = [](double t, const Vec &) {
    double a = t < 1.5 ? 5.0 : (t < 3.0 ? -5.0 : 0.0);
    return vec({a, 0.3 * a, 9.81});
  };
  Trajectory tr = simulate_closed_loop(m, pol, vec({0, 0, 2, 0, 0, 0}), {0.0, 4.0}, m.true_theta, 3);
  HistoryStack s;
  for (const auto & t : regression_tuples(m, tr, 0.2, 0.0, 4.0)) try_admit(s, t);
  ParameterBox out = smid_update(box, s, smid_epsilon(m, 0.2, 1e-6));
  EXPECT_GT(out.lo(0), 0.0);
  EXPECT_LT(out.hi(0), 0.5);
  EXPECT_GT(out.lo(1), 0.0);
  EXPECT_LT(out.hi(1), 0.8);
  EXPECT_TRUE(out.contains(m.true_theta));
}

TEST(Smid, WidthExamples)
{
  ParameterBox b(vec({0.0, 0.0}), vec({0.5, 0.8}));
  EXPECT_DOUBLE_EQ(width(b, vec({1.0, 0.0})), 0.5);
  ParameterBox degenerate(vec({0.3, 0.3}), vec({0.3, 0.3}));
  EXPECT_EQ(width(degenerate, vec({1.0, 0.0})), 0.0);
  EXPECT_EQ(width(degenerate, vec({M_SQRT1_2, M_SQRT1_2})), 0.0);
  ParameterBox unit(vec({0.0, 0.0}), vec({1.0, 1.0}));
  EXPECT_NEAR(width(unit, vec({M_SQRT1_2, M_SQRT1_2})), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(width(unit, vec({1.0, 1.0})), ContractViolation);
}

TEST(Smid, AverageWidthReductionExamples)
{
  ParameterBox b(vec({0.0}), vec({1.0}));
  EXPECT_EQ(avg_width_reduction(b, b, DirectionSet::axes(1)), 0.0);
  EXPECT_DOUBLE_EQ(avg_width_reduction(b, ParameterBox(vec({0.25}), vec({0.75})), DirectionSet::axes(1)), 0.5);
  ParameterBox before(vec({0.0, 0.0}), vec({0.5, 0.8}));
  ParameterBox after(vec({0.0, 0.25}), vec({0.33, 0.34}));
  EXPECT_NEAR(avg_width_reduction(before, after, DirectionSet::axes(2)), 0.44, 1e-12);
  EXPECT_THROW(avg_width_reduction(after, before, DirectionSet::axes(2)), ContractViolation);
}

TEST(Smid, WidthIsTranslationInvariant)
{
  Rng rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    // Dyadic bounds and shifts keep every sum exactly representable.
    auto dyadic = [&](double x) { return std::round(x * 1024.0) / 1024.0; };
    Vec lo = vec({dyadic(u(rng)), dyadic(u(rng)), dyadic(u(rng))});
    Vec span = vec({dyadic(std::abs(u(rng))), dyadic(std::abs(u(rng))), dyadic(std::abs(u(rng)))});
    Vec s = vec({dyadic(u(rng)), dyadic(u(rng)), dyadic(u(rng))});
    Vec d = vec({u(rng), u(rng), u(rng)}).normalized();
    ParameterBox a(lo, lo + span);
    ParameterBox b(a.lo + s, a.hi + s);
    EXPECT_EQ(width(a, d), width(b, d));
  }
}

TEST(Smid, LpBoundsMatchGridScanOracle)
{
  Rng rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double step = 1e-3;
  for (int trial = 0; trial < 25; ++trial) {
    const int p = 1 + trial % 2;
    const int n_tuples = 1 + trial % 5;
    Vec truth = vec({0.4 + 0.2 * u(rng), 0.5 + 0.2 * u(rng)}).head(p);
    ParameterBox box(Vec::Zero(p), Vec::Ones(p));
    std::vector<RegressionTuple> tuples;
    std::vector<Eigen::MatrixXd> F;
    std::vector<Eigen::VectorXd> Y;
    const double eps = 0.05;
    for (int j = 0; j < n_tuples; ++j) {
      RegressionTuple t;
      t.F = Mat(2, p);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < p; ++c) t.F(r, c) = u(rng);
      t.Y = t.F * truth + 0.8 * eps * vec({u(rng), u(rng)});
      tuples.push_back(t);
      F.push_back(Eigen::MatrixXd(t.F));
      Y.push_back(Eigen::VectorXd(t.Y));
    }
    SmidOutcome out = smid_refine(box, tuples, eps);
    ASSERT_TRUE(out.consistent);
    auto g = oracle::grid_scan(F, Y, eps, Eigen::VectorXd(box.lo), Eigen::VectorXd(box.hi), step);
    ASSERT_FALSE(g.empty);
    // Exact reference: vertices of {theta : |Y - F theta| <= eps, theta in box}.
    const int K = 2 * n_tuples;
    Eigen::MatrixXd H(2 * K + 2 * p, p);
    Eigen::VectorXd h(2 * K + 2 * p);
    for (int j = 0; j < n_tuples; ++j) {
      for (int r = 0; r < 2; ++r) {
        H.row(2 * j + r) = F[j].row(r);
        h(2 * j + r) = Y[j](r) + eps;
        H.row(K + 2 * j + r) = -F[j].row(r);
        h(K + 2 * j + r) = eps - Y[j](r);
      }
    }
    H.bottomRows(2 * p) << Eigen::MatrixXd::Identity(p, p), -Eigen::MatrixXd::Identity(p, p);
    h.tail(2 * p) << Eigen::VectorXd(box.hi), -Eigen::VectorXd(box.lo);
    auto v = oracle::polytope_bounds(H, h);
    ASSERT_FALSE(v.empty);
    for (int i = 0; i < p; ++i) {
      EXPECT_NEAR(out.box.lo(i), v.lo(i), 1e-9) << "trial " << trial;
      EXPECT_NEAR(out.box.hi(i), v.hi(i), 1e-9) << "trial " << trial;
      // Every grid-feasible point lies in the LP box.
      EXPECT_LE(out.box.lo(i), g.lo(i) + 1e-9);
      EXPECT_GE(out.box.hi(i), g.hi(i) - 1e-9);
      if (p == 1) {
        EXPECT_NEAR(out.box.lo(i), g.lo(i), step + 1e-9) << "trial " << trial;
        EXPECT_NEAR(out.box.hi(i), g.hi(i), step + 1e-9) << "trial " << trial;
      }
    }
  }
}

TEST(Smid, ClosedLoopUpdatesAreNestedAndContainTruth)
{
  QuadParams p;
  p.disturbance_bound = 0.05;
  ModelSpec m = make_drag_quadrotor(p, 0.3);
  const double eps = smid_epsilon(m, 0.2, 1e-6);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Policy pol = [seed](double t, const Vec &) {
      return vec({4.0 * std::sin(t + seed), 3.0 * std::cos(0.7 * t), 9.81 + std::sin(2 * t)});
    };
    Trajectory tr = simulate_closed_loop(m, pol, vec({0, 0, 2, 0, 0, 0}), {0.0, 6.0}, m.true_theta, seed);
    ParameterBox box(vec({0.0}), vec({0.5}));
    HistoryStack s;
    auto tuples = regression_tuples(m, tr, 0.2, 0.0, 6.0);
    for (const auto & t : tuples) {
      try_admit(s, t);
      ParameterBox next = smid_update(box, s, eps);
      EXPECT_TRUE(box.contains(next));
      EXPECT_TRUE(next.contains(m.true_theta));
      box = next;
    }
    EXPECT_LT(box.hi(0) - box.lo(0), 0.25);
  }
}
