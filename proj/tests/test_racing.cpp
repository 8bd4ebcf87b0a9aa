#include "dualgk/gatekeeper_mission.hpp"
#include "dualgk/racing.hpp"
#include "dualgk/racing_planner.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

using namespace dualgk;

namespace
{

// Circle of radius r, counter-clockwise, starting at (r, 0).
std::vector<Eigen::Vector2d> circle(double r, int n)
{
  std::vector<Eigen::Vector2d> w;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    w.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return w;
}

// Stadium: two 10 m straights joined by radius-4 half circles.
std::vector<Eigen::Vector2d> stadium()
{
  std::vector<Eigen::Vector2d> w;
  for (int i = 0; i < 10; ++i) w.emplace_back(-5.0 + i, -4.0);
  for (int i = 0; i < 12; ++i) {
    const double a = -std::numbers::pi / 2 + std::numbers::pi * i / 12;
    w.emplace_back(5.0 + 4.0 * std::cos(a), 4.0 * std::sin(a));
  }
  for (int i = 0; i < 10; ++i) w.emplace_back(5.0 - i, 4.0);
  for (int i = 0; i < 12; ++i) {
    const double a = std::numbers::pi / 2 + std::numbers::pi * i / 12;
    w.emplace_back(-5.0 + 4.0 * std::cos(a), 4.0 * std::sin(a));
  }
  return w;
}

Vec random_state(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  return vec({5 * U(rng), 5 * U(rng), 3 * U(rng), 0.3 + 4.0 * (U(rng) + 1.0), 1.5 * U(rng), 4 * U(rng), 0.4 * U(rng)});
}

}  // namespace

TEST(Racing, LipIdentityOverRandomStates)
{
  CarParams p;
  ModelSpec m = make_car_model(p, 0.9);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec x = random_state(rng);
    Vec u = vec({p.drive_max * U(rng), -p.brake_max * U(rng), p.steer_rate_limit * (2 * U(rng) - 1)});
    const double mu = 0.2 + 1.8 * U(rng);
    Vec split = m.f0(x) + m.regressor(x, u) * vec({mu}) + m.g0(x) * u;
    Vec direct = car_dynamics(p, x, u, mu, Vec());
    worst = std::max(worst, (split - direct).cwiseAbs().maxCoeff());
    Vec diff = car_dynamics(p, x, u, mu, Vec()) - car_dynamics(p, x, u, 0.0, Vec());
    worst = std::max(worst, (diff - car_regressor(p, x) * mu).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Racing, RegressorOnlyTouchesVelocityRows)
{
  CarParams p;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    Mat phi = car_regressor(p, random_state(rng));
    ASSERT_EQ(phi.rows(), 7);
    ASSERT_EQ(phi.cols(), 1);
    for (int r : {0, 1, 2, 6}) {
      EXPECT_EQ(phi(r, 0), 0.0);
    }
  }
}

TEST(Racing, StraightDrivingHasNoLateralForce)
{
  CarParams p;
  Vec x = vec({0, 0, 0.3, 4.0, 0, 0, 0});
  TireState t = tire_state(p, x);
  EXPECT_EQ(t.alpha_f, 0.0);
  EXPECT_EQ(t.alpha_r, 0.0);
  EXPECT_EQ(t.Fy_f_bar, 0.0);
  EXPECT_EQ(t.Fy_r_bar, 0.0);
  EXPECT_EQ(car_regressor(p, x).norm(), 0.0);
}

TEST(Racing, DoublingMuDoublesLateralTerms)
{
  CarParams p;
  Vec x = vec({0, 0, 0, 3.0, 0.2, 0.5, 0.1});
  Vec u = vec({2.0, -1.0, 0.0});
  Vec base = car_dynamics(p, x, u, 0.0, Vec());
  Vec a = car_dynamics(p, x, u, 0.6, Vec()) - base;
  Vec b = car_dynamics(p, x, u, 1.2, Vec()) - base;
  for (int r : {3, 4, 5}) {
    EXPECT_NEAR(b(r), 2.0 * a(r), 1e-12);
  }
}

TEST(Racing, NormalLoadsSplitPerAxlePair)
{
  CarParams p;
  p.l_f = 0.12;
  p.l_r = 0.2;
  TireState t = tire_state(p, vec({0, 0, 0, 2, 0, 0, 0}));
  EXPECT_NEAR(t.Fz_f + t.Fz_r, 0.5 * p.m * p.gravity, 1e-12);
  EXPECT_NEAR(t.Fz_f, p.m * p.gravity * 0.2 / (2 * 0.32), 1e-12);
}

TEST(Racing, CoastingDecelerates)
{
  CarParams p;
  Vec r = car_dynamics(p, vec({0, 0, 0, 3.0, 0, 0, 0}), Vec::Zero(3), 0.9, Vec());
  EXPECT_LT(r(3), 0.0);
}

TEST(Racing, CoastingEnergyNonIncreasing)
{
  CarParams p;
  ModelSpec m = make_car_model(p, 0.9);
  for (double mu : {0.2, 0.9, 2.0}) {
    Vec x = vec({0, 0, 0, 6.0, 0, 0, 0});
    double e = x(3) * x(3);
    for (int k = 0; k < 300; ++k) {
      x = integrate_step(m, x, Vec::Zero(3), vec({mu}), Vec(), 0.02);
      const double e2 = x(3) * x(3) + x(4) * x(4);
      ASSERT_LE(e2, e + 1e-12);
      e = e2;
    }
  }
}

TEST(Racing, CarModelBounds)
{
  CarParams p;
  ModelSpec m = make_car_model(p, 0.9);
  EXPECT_EQ(m.state_dim, 7);
  EXPECT_EQ(m.input_dim, 3);
  EXPECT_EQ(m.param_dim, 1);
  EXPECT_EQ(m.input_bounds.lo(1), -p.brake_max);
  EXPECT_EQ(m.input_bounds.hi(0), p.drive_max);
  EXPECT_EQ(m.state_bounds.lo(3), p.v_min);
}

TEST(Track, CircleLengthAndCurvature)
{
  Track t(circle(5.0, 64), 1.0);
  EXPECT_NEAR(t.length(), 2 * std::numbers::pi * 5.0, 0.05);
  for (double s : {1.0, 7.0, 20.0}) {
    EXPECT_NEAR(t.curvature_at(s), 0.2, 0.01);
  }
}

TEST(Track, CenterlinePointsHaveZeroLateralError)
{
  Track t(stadium(), 1.5);
  for (double s = 0.0; s < t.length(); s += 1.7) {
    TrackFrame f = t.project(t.point_at(s), t.heading_at(s));
    EXPECT_NEAR(f.e_y, 0.0, 1e-3);
    EXPECT_NEAR(f.e_psi, 0.0, 1e-9);
    EXPECT_NEAR(t.progress_delta(s, f.s), 0.0, 1e-3);
    EXPECT_TRUE(f.in_corridor);
  }
}

TEST(Track, SymmetricOffsetsMirrorLateralError)
{
  Track t(stadium(), 1.5);
  for (double s : {2.0, 15.0, 31.0}) {
    const double h = t.heading_at(s);
    Eigen::Vector2d n(-std::sin(h), std::cos(h));
    TrackFrame l = t.project(t.point_at(s) + 0.6 * n, h);
    TrackFrame r = t.project(t.point_at(s) - 0.6 * n, h);
    EXPECT_GT(l.e_y, 0.0);
    EXPECT_NEAR(l.e_y, -r.e_y, 1e-2);
    EXPECT_NEAR(l.e_y, 0.6, 1e-2);
  }
}

TEST(Track, OffCorridorDetected)
{
  Track t(stadium(), 1.5);
  const double h = t.heading_at(3.0);
  Eigen::Vector2d n(-std::sin(h), std::cos(h));
  EXPECT_FALSE(t.project(t.point_at(3.0) + 1.6 * n, h).in_corridor);
}

TEST(Track, LapWrapsToZero)
{
  Track t(stadium(), 1.5);
  EXPECT_NEAR(t.wrap(t.length()), 0.0, 1e-12);
  EXPECT_NEAR(t.wrap(t.length() + 2.5), 2.5, 1e-12);
  EXPECT_NEAR(t.wrap(-1.0), t.length() - 1.0, 1e-12);
  EXPECT_NEAR(t.progress_delta(t.length() - 0.5, 0.5), 1.0, 1e-12);
  EXPECT_NEAR(t.progress_delta(0.5, t.length() - 0.5), -1.0, 1e-12);
}

TEST(Track, CorridorLimitAndAdmissibility)
{
  CarParams p;
  Track t(stadium(), 1.5);
  EXPECT_DOUBLE_EQ(corridor_limit(t, p), 1.5 - p.vehicle_half_width);
  Vec x = vec({-3.0, -4.0, 0.0, 2.0, 0, 0, 0});
  EXPECT_TRUE(car_state_admissible(t, p, x));
  x(1) = -4.0 - 1.45;
  EXPECT_FALSE(car_state_admissible(t, p, x));
  x(1) = -4.0;
  x(3) = 0.1;
  EXPECT_FALSE(car_state_admissible(t, p, x));
}

TEST(RacingPlanner, SpeedProfileGrowsWithFriction)
{
  Track t(stadium(), 1.5);
  SpeedProfileConfig cfg;
  SpeedProfile lo = make_speed_profile(t, 0.3, 9.81, cfg);
  SpeedProfile hi = make_speed_profile(t, 1.2, 9.81, cfg);
  double sum_lo = 0.0;
  double sum_hi = 0.0;
  for (std::size_t i = 0; i < lo.v.size(); ++i) {
    ASSERT_LE(lo.v[i], hi.v[i] + 1e-12);
    ASSERT_LE(hi.v[i], cfg.v_cap + 1e-12);
    sum_lo += lo.v[i];
    sum_hi += hi.v[i];
  }
  EXPECT_LT(sum_lo, sum_hi);
  // Corner speed on the radius-4 arc obeys the lateral friction budget.
  const double v_corner = std::sqrt(cfg.lateral_fraction * 0.3 * 9.81 * 4.0);
  EXPECT_LE(lo.at(t.length() * 0.25 + 4.0), v_corner * 1.05);
}

TEST(RacingPlanner, PursuitSteersTowardCenterline)
{
  CarParams p;
  Track t(stadium(), 1.5);
  DriverConfig cfg;
  Vec left = vec({0.0, -4.0 + 0.5, 0.0, 2.0, 0, 0, 0});
  Vec right = vec({0.0, -4.0 - 0.5, 0.0, 2.0, 0, 0, 0});
  Vec ul = pursuit_control(t, p, cfg, left, 2.0, 0.0);
  Vec ur = pursuit_control(t, p, cfg, right, 2.0, 0.0);
  EXPECT_LT(ul(2), 0.0);
  EXPECT_GT(ur(2), 0.0);
  EXPECT_NEAR(ul(2), -ur(2), 1e-6);
}

TEST(RacingPlanner, PursuitBrakesOffCorridor)
{
  CarParams p;
  Track t(stadium(), 1.5);
  bool off = false;
  Vec u = pursuit_control(t, p, DriverConfig{}, vec({0.0, -6.0, 0.0, 3.0, 0, 0, 0}), 3.0, 0.0, &off);
  EXPECT_TRUE(off);
  EXPECT_EQ(u(0), 0.0);
  EXPECT_EQ(u(1), -p.brake_max);
}

TEST(RacingPlanner, FallbackSafeAcrossFrictionRange)
{
  CarParams p;
  auto track = std::make_shared<const Track>(stadium(), 1.5);
  FallbackConfig fb;
  ModelSpec m = make_car_model(p, 0.9);
  Policy pol = fallback_policy(track, p, fb);
  const Vec x0 = vec({-3.0, -4.0, 0.0, fb.v_safe, 0, 0, 0});
  for (double mu : {0.2, 0.5, 1.0, 2.0}) {
    Trajectory tr = simulate_closed_loop(m, pol, x0, {0.0, 40.0}, vec({mu}), 3);
    for (const Vec & x : tr.states) {
      ASSERT_TRUE(car_state_admissible(*track, p, x)) << "mu " << mu;
    }
    EXPECT_GT(trajectory_progress(*track, tr), track->length()) << "mu " << mu;
    EXPECT_TRUE(in_fallback_set(*track, p, fb, tr.states.back())) << "mu " << mu;
  }
}

TEST(RacingPlanner, NominalPlanMakesProgress)
{
  CarParams p;
  auto track = std::make_shared<const Track>(stadium(), 1.5);
  ModelSpec m = make_car_model(p, 0.9);
  RacingPlannerConfig cfg;
  const Vec x0 = vec({-3.0, -4.0, 0.0, 2.2, 0, 0, 0});
  RacingPlan a = plan_nominal_racing(m, track, p, x0, 0.0, 0.9, 2.0, cfg, 4);
  RacingPlan b = plan_nominal_racing(m, track, p, x0, 0.0, 0.9, 2.0, cfg, 4);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_FALSE(a.violation);
  EXPECT_GT(a.progress, 2.2 * 2.0);
  EXPECT_NEAR(a.traj.times.back(), 2.0, 1e-9);
}

TEST(RacingPlanner, InformativePlanHasFiniteLogdet)
{
  CarParams p;
  auto track = std::make_shared<const Track>(stadium(), 1.5);
  ModelSpec m = make_car_model(p, 0.9);
  RacingPlannerConfig cfg;
  InfoObjective info{30.0, Mat(), 1e-6};
  const Vec x0 = vec({-3.0, -4.0, 0.0, 2.2, 0, 0, 0});
  RacingPlan plan = plan_informative_racing(m, track, p, x0, 0.0, 0.5, 2.0, info, cfg, 9);
  EXPECT_TRUE(std::isfinite(plan.logdet));
  EXPECT_FALSE(plan.violation);
}

TEST(RacingMission, MethodNamesRoundTrip)
{
  for (Method m : {Method::Nominal, Method::Weighted, Method::Fallback, Method::NominalGk, Method::WeightedGk,
                   Method::DualGatekeeper}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("greedy"), std::invalid_argument);
  EXPECT_TRUE(method_runs_smid(Method::DualGatekeeper));
  EXPECT_TRUE(method_runs_smid(Method::Weighted));
  EXPECT_FALSE(method_runs_smid(Method::Nominal));
  EXPECT_FALSE(method_runs_smid(Method::Fallback));
  EXPECT_FALSE(method_runs_smid(Method::NominalGk));
}

TEST(RacingMission, FallbackOnlyCompletesLapsSafely)
{
  CarParams p;
  RacingMissionConfig cfg;
  cfg.track = std::make_shared<const Track>(stadium(), 1.5);
  cfg.car = p;
  cfg.laps = 2;
  ModelSpec m = make_car_model(p, 0.9);
  MissionLog log = run_racing_mission(m, cfg, Method::Fallback, vec({-3.0, -4.0, 0.0, 2.2, 0, 0, 0}), p.mu_bounds, 1);
  EXPECT_TRUE(log.safe);
  ASSERT_EQ(log.lap_times.size(), 2u);
  EXPECT_EQ(log.informative_commits, 0);
  EXPECT_EQ(log.final_box.lo(0), 0.2);
  EXPECT_EQ(log.final_box.hi(0), 2.0);
  EXPECT_DOUBLE_EQ(log.total_cost, log.executed.times.back());
}
