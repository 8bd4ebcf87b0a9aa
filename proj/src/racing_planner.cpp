#include "dualgk/racing_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dualgk
{

double SpeedProfile::at(double s) const
{
  double r = std::fmod(s, length);
  if (r < 0.0) {
    r += length;
  }
  const double w = r / ds;
  const auto i = static_cast<std::size_t>(w) % v.size();
  const double a = w - std::floor(w);
  return (1.0 - a) * v[i] + a * v[(i + 1) % v.size()];
}

SpeedProfile make_speed_profile(const Track & track, double mu, double gravity, const SpeedProfileConfig & cfg)
{
  SpeedProfile prof;
  prof.ds = track.ds();
  prof.length = track.length();
  const std::size_t n = track.size();
  const int half = std::max(0, static_cast<int>(std::round(0.5 * cfg.curvature_window / track.ds())));
  std::vector<double> kappa(n);
  for (std::size_t i = 0; i < n; ++i) {
    double k = 0.0;
    for (int j = -half; j <= half; ++j) {
      k = std::max(k, std::abs(track.curvature_at((static_cast<double>(i) + j) * track.ds())));
    }
    kappa[i] = k;
  }
  prof.v.resize(n);
  const double a_lat = std::max(0.0, cfg.lateral_fraction * mu * gravity);
  // Longitudinal limits share the planned friction budget.
  const double accel = std::min(cfg.accel, a_lat);
  const double decel = std::min(cfg.decel, a_lat);
  for (std::size_t i = 0; i < n; ++i) {
    prof.v[i] = kappa[i] > 1e-9 ? std::min(cfg.v_cap, std::sqrt(a_lat / kappa[i])) : cfg.v_cap;
  }
  // Two sweeps around the loop settle the wrap-around.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (n - 1 - k);
      const std::size_t next = (i + 1) % n;
      prof.v[i] = std::min(prof.v[i], std::sqrt(prof.v[next] * prof.v[next] + 2.0 * decel * prof.ds));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t prev = (i + n - 1) % n;
      prof.v[i] = std::min(prof.v[i], std::sqrt(prof.v[prev] * prof.v[prev] + 2.0 * accel * prof.ds));
    }
  }
  return prof;
}

SpeedProfile constant_speed_profile(const Track & track, double v)
{
  SpeedProfile prof;
  prof.ds = track.ds();
  prof.length = track.length();
  prof.v.assign(track.size(), v);
  return prof;
}

Vec pursuit_control(
  const Track & track, const CarParams & car, const DriverConfig & cfg, const Vec & x, double v_ref,
  double lateral_offset, bool * off_corridor)
{
  using namespace car_index;
  const TrackFrame f = track_frame(track, x);
  const bool off = std::abs(f.e_y) > corridor_limit(track, car);
  if (off_corridor) {
    *off_corridor = off;
  }
  const double offset = off ? 0.0 : lateral_offset;
  const double v = x(vx);
  const double L = std::max(cfg.lookahead_min, cfg.lookahead_time * v);
  const double s_t = f.s + L;
  const double h = track.heading_at(s_t);
  const Eigen::Vector2d target =
    track.point_at(s_t) + offset * Eigen::Vector2d(-std::sin(h), std::cos(h));
  const Eigen::Vector2d rel_w = target - Eigen::Vector2d(x(px), x(py));
  const double c = std::cos(x(psi));
  const double s = std::sin(x(psi));
  const Eigen::Vector2d rel(c * rel_w.x() + s * rel_w.y(), -s * rel_w.x() + c * rel_w.y());
  const double dist = std::max(rel.norm(), 1e-3);
  const double alpha = std::atan2(rel.y(), rel.x());
  const double wheelbase = car.l_f + car.l_r;
  const double lim = cfg.steer_fraction * car.steer_limit;
  const double delta_des = std::clamp(std::atan(2.0 * wheelbase * std::sin(alpha) / dist), -lim, lim);
  const double rate =
    std::clamp(cfg.steer_servo * (delta_des - x(delta)), -car.steer_rate_limit, car.steer_rate_limit);

  double force = 0.0;
  if (off) {
    force = -car.brake_max;
  } else {
    const double resist = 0.5 * car.rho * car.A_front * car.C_d_aero * v * v + car.f_r * car.gravity;
    force = car.m * (cfg.speed_gain * (v_ref - v) + resist);
  }
  Vec u = Vec::Zero(3);
  if (force >= 0.0) {
    u(0) = std::min(force, car.drive_max);
  } else {
    const double taper = std::clamp(v / cfg.brake_taper_speed, 0.0, 1.0);
    u(1) = std::max(force, -car.brake_max) * taper;
  }
  u(2) = rate;
  return u;
}

Vec fallback_pursuit(const Track & track, const CarParams & car, const FallbackConfig & cfg, const Vec & x, bool * off)
{
  return pursuit_control(track, car, cfg.driver, x, cfg.v_safe, 0.0, off);
}

Policy fallback_policy(std::shared_ptr<const Track> track, const CarParams & car, const FallbackConfig & cfg)
{
  return [track, car, cfg](double, const Vec & x) { return fallback_pursuit(*track, car, cfg, x); };
}

bool in_fallback_set(const Track & track, const CarParams & car, const FallbackConfig & cfg, const Vec & x)
{
  if (!car_state_admissible(track, car, x)) {
    return false;
  }
  const TrackFrame f = track_frame(track, x);
  return std::abs(f.e_y) <= 0.5 * track.half_width() && std::abs(f.e_psi) <= 0.35 &&
         x(car_index::vx) <= cfg.v_safe + 0.5;
}

Vec DriverPlan::input(double t, const Vec & x) const
{
  double dv = 0.0;
  double dy = 0.0;
  if (!offsets.empty()) {
    const double k = std::floor((t - t0) / block_dt + 1e-9);
    const auto j = static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(offsets.size() - 1)));
    dv = offsets[j](0);
    dy = offsets[j](1);
  }
  const double s = track_frame(*track, x).s;
  const double v = x(car_index::vx);
  const double v_prof = std::min(profile->at(s), profile->at(s + cfg.preview_time * std::max(v, 0.0)));
  const double v_ref = std::max(0.0, v_prof + dv);
  return pursuit_control(*track, car, cfg, x, v_ref, dy);
}

Policy DriverPlan::policy() const
{
  auto self = std::make_shared<const DriverPlan>(*this);
  return [self](double t, const Vec & x) { return self->input(t, x); };
}

double trajectory_progress(const Track & track, const Trajectory & traj)
{
  if (traj.empty()) {
    return 0.0;
  }
  double total = 0.0;
  double prev = track_frame(track, traj.states.front()).s;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double s = track_frame(track, traj.states[k]).s;
    total += track.progress_delta(prev, s);
    prev = s;
  }
  return total;
}

RacingStageSummary racing_trajectory_cost(
  const Track & track, const CarParams & car, const SpeedProfile & profile, const RacingCostWeights & w,
  const Trajectory & traj)
{
  using namespace car_index;
  RacingStageSummary out;
  if (traj.empty()) {
    return out;
  }
  const double limit = corridor_limit(track, car);
  const double soft = limit - w.boundary_margin;
  double prev_s = track_frame(track, traj.states.front()).s;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double dt = traj.times[k + 1] - traj.times[k];
    const Vec & x = traj.states[k + 1];
    const Vec & u = traj.inputs[k];
    const TrackFrame f = track_frame(track, x);
    const double ds = track.progress_delta(prev_s, f.s);
    prev_s = f.s;
    out.progress += ds;
    const double ev = x(vx) - profile.at(f.s);
    double c = -w.q_progress * ds;
    c += dt * (w.q_epsi * f.e_psi * f.e_psi + w.q_v * ev * ev + w.q_vy * x(vy) * x(vy) +
               w.q_omega * x(omega) * x(omega));
    c += dt * u.cwiseProduct(u).dot(w.R);
    if (k > 0) {
      const Vec du = u - traj.inputs[k - 1];
      c += du.cwiseProduct(du).dot(w.R_delta);
    }
    const double excess = std::max(0.0, std::abs(f.e_y) - soft);
    c += dt * w.q_boundary * excess * excess;
    out.max_abs_ey = std::max(out.max_abs_ey, std::abs(f.e_y));
    if (!car_state_admissible(track, car, x)) {
      out.violation = true;
      c += 1e3;
    }
    out.cost += c;
  }
  return out;
}

namespace
{

struct PlanEval
{
  Trajectory traj;
  RacingStageSummary stage;
  double logdet{0.0};
};

RacingPlan plan_racing(
  const ModelSpec & model, std::shared_ptr<const Track> track, const CarParams & car, const Vec & x_k, double t_k,
  double mu_hat, double horizon, const InfoObjective * info, const RacingPlannerConfig & cfg, uint64_t seed,
  const InputBlocks * warm)
{
  auto profile = std::make_shared<const SpeedProfile>(make_speed_profile(*track, mu_hat, car.gravity, cfg.profile));
  DriverPlan base;
  base.track = track;
  base.profile = profile;
  base.car = car;
  base.cfg = cfg.driver;
  base.t0 = t_k;
  base.block_dt = cfg.block_dt;
  const int n_blocks = block_count(horizon, cfg.block_dt);
  const Vec theta = vec({mu_hat});
  RolloutOptions opts;
  opts.dt = cfg.dt;
  opts.disturbed = false;

  auto evaluate = [&](const InputBlocks & blocks) {
    DriverPlan d = base;
    d.offsets = blocks;
    Rng rng(0);
    PlanEval e;
    const Policy pol = [&d](double t, const Vec & x) { return d.input(t, x); };
    try {
      e.traj = rollout(model, pol, x_k, t_k, horizon, theta, rng, opts).traj;
    } catch (const std::exception &) {
      e.stage.cost = 1e300;
      e.stage.violation = true;
      return e;
    }
    e.stage = racing_trajectory_cost(*track, car, *profile, cfg.weights, e.traj);
    if (info) {
      e.logdet = information_logdet(model, e.traj, *info);
    }
    return e;
  };
  auto total = [&](const PlanEval & e) {
    return info ? e.stage.cost - info->gamma * e.logdet : e.stage.cost;
  };

  InputBlocks mean(static_cast<std::size_t>(n_blocks), Vec::Zero(2));
  if (warm && !warm->empty()) {
    for (int j = 0; j < n_blocks; ++j) {
      mean[static_cast<std::size_t>(j)] = (*warm)[std::min(static_cast<std::size_t>(j), warm->size() - 1)];
    }
  }
  const double dy_lim = std::max(0.0, track->half_width() - cfg.dy_margin);
  const BoxSet bounds{vec({-cfg.dv_limit, -dy_lim}), vec({cfg.dv_limit, dy_lim})};
  const SequenceCost cost = [&](const InputBlocks & blocks) { return total(evaluate(blocks)); };
  SamplingResult best = mppi_optimize(mean, cfg.noise_std, bounds, cost, cfg.mppi, seed);
  // The zero-offset profile pursuit always competes.
  const InputBlocks zero(static_cast<std::size_t>(n_blocks), Vec::Zero(2));
  const double c0 = cost(zero);
  if (c0 < best.cost) {
    best.blocks = zero;
    best.cost = c0;
  }
  const PlanEval e = evaluate(best.blocks);
  RacingPlan plan;
  plan.driver = base;
  plan.driver.offsets = best.blocks;
  plan.traj = e.traj;
  plan.traj.tag = info ? TrajectoryTag::Informative : TrajectoryTag::Nominal;
  plan.cost = total(e);
  plan.progress = e.stage.progress;
  plan.logdet = e.logdet;
  plan.violation = e.stage.violation;
  return plan;
}

}  // namespace

RacingPlan plan_nominal_racing(
  const ModelSpec & model, std::shared_ptr<const Track> track, const CarParams & car, const Vec & x_k, double t_k,
  double mu_hat, double horizon, const RacingPlannerConfig & cfg, uint64_t seed, const InputBlocks * warm)
{
  return plan_racing(model, std::move(track), car, x_k, t_k, mu_hat, horizon, nullptr, cfg, seed, warm);
}

RacingPlan plan_informative_racing(
  const ModelSpec & model, std::shared_ptr<const Track> track, const CarParams & car, const Vec & x_k, double t_k,
  double mu_hat, double horizon, const InfoObjective & info, const RacingPlannerConfig & cfg, uint64_t seed,
  const InputBlocks * warm)
{
  return plan_racing(model, std::move(track), car, x_k, t_k, mu_hat, horizon, &info, cfg, seed, warm);
}

Policy racing_excitation_policy(
  std::shared_ptr<const Track> track, const CarParams & car, const RacingPlannerConfig & cfg, double mu)
{
  auto profile = std::make_shared<const SpeedProfile>(make_speed_profile(*track, mu, car.gravity, cfg.profile));
  const double amp = 0.5 * std::max(0.0, track->half_width() - cfg.dy_margin);
  return [track, profile, car, driver = cfg.driver, amp](double t, const Vec & x) {
    const double s = track_frame(*track, x).s;
    return pursuit_control(*track, car, driver, x, profile->at(s), amp * std::sin(1.5 * t));
  };
}

}  // namespace dualgk
