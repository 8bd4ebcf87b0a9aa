#pragma once

#include "dualgk/planners.hpp"
#include "dualgk/racing.hpp"
#include "dualgk/sampling_optimizer.hpp"

#include <memory>
#include <vector>

namespace dualgk
{

struct SpeedProfileConfig
{
  double lateral_fraction{0.9};  // share of mu*g used for cornering
  double v_cap{10.0};
  double accel{4.0};  // further capped by lateral_fraction * mu * g
  double decel{4.0};
  double curvature_window{1.0};  // m, max-filter on |curvature|
};

struct SpeedProfile
{
  std::vector<double> v;
  double ds{0.05};
  double length{0.0};

  double at(double s) const;
};

SpeedProfile make_speed_profile(const Track & track, double mu, double gravity, const SpeedProfileConfig & cfg);
SpeedProfile constant_speed_profile(const Track & track, double v);

struct DriverConfig
{
  double lookahead_min{0.8};
  double lookahead_time{0.3};
  double steer_servo{15.0};
  double speed_gain{4.0};
  double preview_time{0.3};
  double steer_fraction{0.95};
  double brake_taper_speed{0.5};
};

// Pure pursuit toward a laterally offset centerline point with speed regulation to v_ref.
// Off-corridor states get maximal braking and centerline steering; *off_corridor is set.
Vec pursuit_control(
  const Track & track, const CarParams & car, const DriverConfig & cfg, const Vec & x, double v_ref,
  double lateral_offset, bool * off_corridor = nullptr);

struct FallbackConfig
{
  double v_safe{2.2};
  DriverConfig driver{};
};

Vec fallback_pursuit(
  const Track & track, const CarParams & car, const FallbackConfig & cfg, const Vec & x, bool * off_corridor = nullptr);

Policy fallback_policy(std::shared_ptr<const Track> track, const CarParams & car, const FallbackConfig & cfg);

// Centerline tube of half the half-width at near-fallback speed.
bool in_fallback_set(const Track & track, const CarParams & car, const FallbackConfig & cfg, const Vec & x);

// Speed-profile pursuit with piecewise-constant offsets (dv, dy) indexed from t0.
struct DriverPlan
{
  std::shared_ptr<const Track> track;
  std::shared_ptr<const SpeedProfile> profile;
  CarParams car;
  DriverConfig cfg;
  double t0{0.0};
  double block_dt{0.5};
  InputBlocks offsets;

  Vec input(double t, const Vec & x) const;
  Policy policy() const;
};

struct RacingCostWeights
{
  double q_progress{10.0};
  double q_epsi{1.0};
  double q_v{0.5};
  double q_vy{1.0};
  double q_omega{0.05};
  Vec R{vec({1e-3, 1e-3, 0.02})};
  Vec R_delta{vec({1e-2, 1e-2, 0.02})};
  double q_boundary{1e4};
  double boundary_margin{0.3};
};

struct RacingStageSummary
{
  double cost{0.0};
  double progress{0.0};
  double max_abs_ey{0.0};
  bool violation{false};
};

// Stage cost integrated along a trajectory; v_ref read from the profile.
RacingStageSummary racing_trajectory_cost(
  const Track & track, const CarParams & car, const SpeedProfile & profile, const RacingCostWeights & w,
  const Trajectory & traj);

struct RacingPlannerConfig
{
  double block_dt{0.5};
  double dt{0.02};
  MppiConfig mppi{64, 3, 1.0};
  Vec noise_std{vec({0.8, 0.35})};
  double dv_limit{2.0};
  double dy_margin{0.4};  // |dy| <= half_width - dy_margin
  SpeedProfileConfig profile{};
  DriverConfig driver{};
  RacingCostWeights weights{};
};

struct RacingPlan
{
  DriverPlan driver;
  Trajectory traj;
  double cost{0.0};
  double progress{0.0};
  double logdet{0.0};
  bool violation{false};
};

// Nominal racing plan on theta_hat dynamics; no robustness margin.
RacingPlan plan_nominal_racing(
  const ModelSpec & model, std::shared_ptr<const Track> track, const CarParams & car, const Vec & x_k, double t_k,
  double mu_hat, double horizon, const RacingPlannerConfig & cfg, uint64_t seed,
  const InputBlocks * warm = nullptr);

// Racing cost minus gamma * logdet of the information matrix along the plan.
RacingPlan plan_informative_racing(
  const ModelSpec & model, std::shared_ptr<const Track> track, const CarParams & car, const Vec & x_k, double t_k,
  double mu_hat, double horizon, const InfoObjective & info, const RacingPlannerConfig & cfg, uint64_t seed,
  const InputBlocks * warm = nullptr);

// Fast pursuit on the mu-profile with a weaving lateral offset; used to size integration margins.
Policy racing_excitation_policy(
  std::shared_ptr<const Track> track, const CarParams & car, const RacingPlannerConfig & cfg, double mu);

// Progress along the track of a trajectory, unwrapped across the start line.
double trajectory_progress(const Track & track, const Trajectory & traj);

}  // namespace dualgk
