#include "dualgk/planners.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <execution>
#include <limits>
#include <numeric>

namespace dualgk
{

double quad_stage_cost(const QuadTask & task, const Vec & x, const Vec & u)
{
  return task.alpha * u.squaredNorm() + task.beta * (x.head<3>() - task.goal.center).squaredNorm();
}

double quad_trajectory_cost(const QuadTask & task, const Trajectory & nominal)
{
  double J = 0.0;
  for (std::size_t k = 0; k + 1 < nominal.size(); ++k) {
    double h = nominal.times[k + 1] - nominal.times[k];
    double pa = (nominal.states[k].head<3>() - task.goal.center).squaredNorm();
    double pb = (nominal.states[k + 1].head<3>() - task.goal.center).squaredNorm();
    J += h * (task.alpha * nominal.inputs[k].squaredNorm() + 0.5 * task.beta * (pa + pb));
  }
  return J;
}

namespace
{

double quad_terminal_violation(const QuadTask & task, const Vec & x, const Vec & r, double margin)
{
  double dp = (x.head<3>() - task.goal.center).norm() + r.head<3>().norm() + margin - task.goal.radius;
  double dv = x.segment<3>(3).norm() + r.segment<3>(3).norm() + margin - task.goal.speed_radius;
  return std::max(0.0, dp) + std::max(0.0, dv);
}

double input_excess(const BoxSet & U, const Vec & u, const Vec & du)
{
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    total += std::max(0.0, u(i) + du(i) - U.hi(i)) + std::max(0.0, U.lo(i) - (u(i) - du(i)));
  }
  return total;
}

struct Deviation
{
  std::vector<Vec> state;
  std::vector<Vec> input;
  bool blown{false};
};

Deviation track_rollout(
  const ModelSpec & model, const Trajectory & nominal, const Mat & K, const Vec & theta, Rng & rng)
{
  Deviation dev;
  dev.state.reserve(nominal.size());
  dev.input.reserve(nominal.inputs.size());
  Vec x = nominal.states.front();
  dev.state.push_back(Vec::Zero(model.state_dim));
  for (std::size_t k = 0; k < nominal.inputs.size(); ++k) {
    Vec du = K * (nominal.states[k] - x);
    Vec u = model.input_bounds.clamp(nominal.inputs[k] + du);
    Vec w = sample_disturbance(model, rng);
    try {
      x = integrate_step(model, x, u, theta, w, nominal.times[k + 1] - nominal.times[k]);
    } catch (const NumericalBlowup &) {
      dev.blown = true;
      return dev;
    }
    dev.input.push_back(du.cwiseAbs());
    dev.state.push_back((x - nominal.states[k + 1]).cwiseAbs());
  }
  return dev;
}

Vec theta_for(const ParameterBox & box, const std::vector<Vec> & vertices, std::size_t l, Rng & rng)
{
  return l < vertices.size() ? vertices[l] : box.sample(rng);
}

std::vector<Vec> coarse_radii(const TubeEstimate & tube, double dt_fine, double dt_coarse, std::size_t n_coarse)
{
  std::vector<Vec> out(n_coarse);
  for (std::size_t k = 0; k < n_coarse; ++k) {
    std::size_t i = static_cast<std::size_t>(std::llround(k * dt_coarse / dt_fine));
    out[k] = tube.state_radii[std::min(i, tube.state_radii.size() - 1)];
  }
  return out;
}

std::vector<Vec> coarse_input_radii(const TubeEstimate & tube, double dt_fine, double dt_coarse, std::size_t n_coarse)
{
  std::vector<Vec> out(n_coarse);
  for (std::size_t k = 0; k < n_coarse; ++k) {
    std::size_t i = static_cast<std::size_t>(std::llround(k * dt_coarse / dt_fine));
    out[k] = tube.input_radii[std::min(i, tube.input_radii.size() - 1)];
  }
  return out;
}

TubeEstimate elementwise_max(const TubeEstimate & a, const TubeEstimate & b)
{
  TubeEstimate out = a;
  for (std::size_t k = 0; k < out.state_radii.size() && k < b.state_radii.size(); ++k) {
    out.state_radii[k] = out.state_radii[k].cwiseMax(b.state_radii[k]);
  }
  for (std::size_t k = 0; k < out.input_radii.size() && k < b.input_radii.size(); ++k) {
    out.input_radii[k] = out.input_radii[k].cwiseMax(b.input_radii[k]);
  }
  return out;
}

InputBlocks guide_blocks(
  const ModelSpec & model, const QuadTask & task, const Vec & x_k, double t_k, double T_B, const Vec & theta_hat,
  double block_dt)
{
  std::vector<Eigen::Vector3d> path;
  path.push_back(x_k.head<3>());
  // Resume the guide from the waypoint after the closest segment.
  std::size_t next = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < task.guide.size(); ++i) {
    double d = (task.guide[i] - x_k.head<3>()).norm();
    if (d < best) {
      best = d;
      next = i;
    }
  }
  if (next + 1 < task.guide.size() && (task.guide[next + 1] - x_k.head<3>()).norm() <
                                        (task.guide[next + 1] - task.guide[next]).norm()) {
    ++next;
  }
  for (std::size_t i = next; i < task.guide.size(); ++i) {
    if ((task.guide[i] - path.back()).norm() > 1e-6) {
      path.push_back(task.guide[i]);
    }
  }
  if ((task.goal.center - path.back()).norm() > 1e-6) {
    path.push_back(task.goal.center);
  }
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < path.size(); ++i) {
    cum.push_back(cum.back() + (path[i] - path[i - 1]).norm());
  }
  const double L = cum.back();
  const double v = std::min(task.guide_speed, L / std::max(0.5, T_B - 1.5));
  const Vec hover = vec({0.0, 0.0, -model.f0(Vec::Zero(model.state_dim))(5)});
  auto guide = [&, v, L](double t, const Vec & x) {
    double s = std::min(L, v * (t - t_k));
    std::size_t i = 1;
    while (i + 1 < path.size() && cum[i] < s) {
      ++i;
    }
    Eigen::Vector3d dir = (path[i] - path[i - 1]).normalized();
    Eigen::Vector3d p = path[i - 1] + (s - cum[i - 1]) * dir;
    Eigen::Vector3d vr = s < L ? Eigen::Vector3d(v * dir) : Eigen::Vector3d::Zero();
    Vec drag = model.regressor(x, Vec::Zero(model.input_dim)) * theta_hat;
    Vec u(3);
    u = hover + 3.0 * (p - x.head<3>()) + 3.5 * (vr - x.segment<3>(3)) - drag.tail<3>();
    return u;
  };
  Rng rng(0);
  RolloutOptions opts;
  opts.dt = model.dt;
  opts.disturbed = false;
  Trajectory tr = rollout(model, guide, x_k, t_k, T_B, theta_hat, rng, opts).traj;
  return blocks_from_trajectory(tr, block_dt, block_count(T_B, block_dt));
}

InputBlocks shifted_blocks(const BackupPlan & prev, double t_k, double block_dt, int n_blocks)
{
  InputBlocks out;
  double offset = (t_k - prev.nominal.start_time()) / block_dt;
  long start = std::max(0L, static_cast<long>(std::llround(offset)));
  for (int j = 0; j < n_blocks; ++j) {
    std::size_t idx = static_cast<std::size_t>(start + j);
    out.push_back(idx < prev.blocks.size() ? prev.blocks[idx] : prev.blocks.back());
  }
  return out;
}

}  // namespace

TubeConstraints quad_constraints(const QuadTask & task, const ModelSpec & model)
{
  TubeConstraints cons;
  CorridorMap map = task.map;
  cons.state_violation = [map](const Vec & x, const Vec & r) {
    return map.violation(x, r.head<3>(), r.segment<3>(3).norm());
  };
  cons.inputs = model.input_bounds;
  return cons;
}

Vec ancillary_feedback(const ModelSpec & model, const Trajectory & nominal, const Mat & K, double t, const Vec & x)
{
  Vec p_x = nominal.state_at(t);
  Vec p_u = nominal.input_at(t);
  if (K.size() == 0) {
    return model.input_bounds.clamp(p_u);
  }
  return model.input_bounds.clamp(p_u + K * (p_x - x));
}

Vec ancillary_feedback(const ModelSpec & model, const BackupPlan & plan, double t, const Vec & x)
{
  return ancillary_feedback(model, plan.nominal, plan.ancillary_gains, t, x);
}

Policy ancillary_policy(const ModelSpec & model, const Trajectory & nominal, const Mat & K)
{
  (void)model;
  return [nominal, K](double t, const Vec & x) -> Vec {
    Vec p_u = nominal.input_at(t);
    if (K.size() == 0) {
      return p_u;
    }
    return p_u + K * (nominal.state_at(t) - x);
  };
}

Mat quad_ancillary_gains(double kp, double kd)
{
  Mat K = Mat::Zero(3, 6);
  for (int i = 0; i < 3; ++i) {
    K(i, i) = kp;
    K(i, 3 + i) = kd;
  }
  return K;
}

TubeEstimate estimate_tube(
  const ModelSpec & model, const Trajectory & nominal, const Mat & K, const ParameterBox & box, int n,
  double inflation, uint64_t seed, double floor_time)
{
  require(n >= 1, "estimate_tube: need at least one rollout");
  require(!nominal.inputs.empty(), "estimate_tube: nominal has no inputs");
  const std::vector<Vec> vertices = box.vertices();
  std::vector<Deviation> devs(static_cast<std::size_t>(n));
  std::vector<std::size_t> idx(devs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t l) {
    Rng rng(derive_seed(seed, l));
    Vec theta = theta_for(box, vertices, l, rng);
    devs[l] = track_rollout(model, nominal, K, theta, rng);
  });
  TubeEstimate tube;
  const double inf = std::numeric_limits<double>::infinity();
  tube.state_radii.assign(nominal.size(), Vec::Zero(model.state_dim));
  tube.input_radii.assign(nominal.inputs.size(), Vec::Zero(model.input_dim));
  for (const auto & d : devs) {
    if (d.blown) {
      for (auto & r : tube.state_radii) {
        r.setConstant(inf);
      }
      break;
    }
    for (std::size_t k = 0; k < d.state.size(); ++k) {
      tube.state_radii[k] = tube.state_radii[k].cwiseMax(d.state[k]);
    }
    for (std::size_t k = 0; k < d.input.size(); ++k) {
      tube.input_radii[k] = tube.input_radii[k].cwiseMax(d.input[k]);
    }
  }
  const double floor = model.disturbance_bound * floor_time;
  Vec ufloor = Vec::Zero(model.input_dim);
  if (K.size() > 0) {
    ufloor = K.cwiseAbs().rowwise().sum() * floor;
  }
  for (auto & r : tube.state_radii) {
    r = r * inflation + Vec::Constant(model.state_dim, floor);
  }
  for (auto & r : tube.input_radii) {
    r = r * inflation + ufloor;
  }
  return tube;
}

double tube_coverage(
  const ModelSpec & model, const Trajectory & nominal, const Mat & K, const ParameterBox & box,
  const TubeEstimate & tube, int n, uint64_t seed)
{
  require(n >= 1, "tube_coverage: need at least one rollout");
  std::vector<char> inside(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> idx(inside.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t l) {
    Rng rng(derive_seed(seed, l));
    Vec theta = box.sample(rng);
    Deviation d = track_rollout(model, nominal, K, theta, rng);
    if (d.blown) {
      return;
    }
    for (std::size_t k = 0; k < d.state.size(); ++k) {
      if ((d.state[k].array() > tube.state_radii[k].array()).any()) {
        return;
      }
    }
    for (std::size_t k = 0; k < d.input.size(); ++k) {
      if ((d.input[k].array() > tube.input_radii[k].array()).any()) {
        return;
      }
    }
    inside[l] = 1;
  });
  return static_cast<double>(std::count(inside.begin(), inside.end(), 1)) / n;
}

double tube_violation(const TubeConstraints & cons, const Trajectory & nominal, const TubeEstimate & tube)
{
  double worst = 0.0;
  for (std::size_t k = 0; k < nominal.size(); ++k) {
    if (!tube.state_radii[k].allFinite()) {
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst, cons.state_violation(nominal.states[k], tube.state_radii[k]));
  }
  for (std::size_t k = 0; k < nominal.inputs.size(); ++k) {
    worst = std::max(worst, input_excess(cons.inputs, nominal.inputs[k], tube.input_radii[k]));
  }
  return worst;
}

BackupPlan plan_backup(
  const ModelSpec & model, const QuadTask & task, const Vec & x_k, double t_k, const ParameterBox & box,
  const BackupConfig & cfg, uint64_t seed, const BackupPlan * previous)
{
  const double T_B = task.t_final - t_k;
  require(T_B > 0.0, "plan_backup: mission already over");
  BackupPlan plan;
  plan.backup_horizon = T_B;
  plan.ancillary_gains = quad_ancillary_gains(cfg.kp, cfg.kd);
  const Mat & K = plan.ancillary_gains;
  const Vec theta_hat = box.midpoint();
  const Vec half = 0.5 * (box.hi - box.lo);
  const int n_blocks = block_count(T_B, cfg.block_dt);
  const TubeConstraints cons = quad_constraints(task, model);
  const std::size_t n_coarse = static_cast<std::size_t>(std::llround(T_B / cfg.plan_dt)) + 1;
  const double pg = cfg.tube_prediction_gain;

  auto fine = [&](const InputBlocks & b) {
    Trajectory tr = simulate_blocks(model, x_k, t_k, b, cfg.block_dt, theta_hat, model.dt, T_B);
    tr.tag = TrajectoryTag::Backup;
    return tr;
  };
  auto tube_of = [&](const Trajectory & nom) {
    return estimate_tube(model, nom, K, box, cfg.tube.n_tube, cfg.tube.inflation, seed, cfg.tube.floor_time);
  };
  auto violation_of = [&](const Trajectory & nom, const TubeEstimate & tube) {
    return tube_violation(cons, nom, tube) +
           quad_terminal_violation(task, nom.states.back(), tube.state_radii.back(), 0.0);
  };

  // Candidate warm starts: previous plan shifted, and the guide path.
  std::vector<InputBlocks> warm;
  if (previous != nullptr && !previous->blocks.empty()) {
    warm.push_back(shifted_blocks(*previous, t_k, cfg.block_dt, n_blocks));
  }
  warm.push_back(guide_blocks(model, task, x_k, t_k, T_B, theta_hat, cfg.block_dt));

  // Best self-consistent nominal seen so far.
  bool have_ok = false;
  double best_ok_cost = std::numeric_limits<double>::infinity();
  InputBlocks best_ok_blocks;
  TubeEstimate best_ok_tube;
  auto offer = [&](const InputBlocks & b, const Trajectory & nom, const TubeEstimate & tube) {
    if (violation_of(nom, tube) > 0.0) {
      return false;
    }
    double c = quad_trajectory_cost(task, nom);
    if (c < best_ok_cost) {
      have_ok = true;
      best_ok_cost = c;
      best_ok_blocks = b;
      best_ok_tube = tube;
    }
    return true;
  };

  TubeEstimate tube_used;
  InputBlocks mean;
  double mean_cost = std::numeric_limits<double>::infinity();
  for (const auto & w : warm) {
    Trajectory nom = fine(w);
    TubeEstimate tw = tube_of(nom);
    offer(w, nom, tw);
    tube_used = tube_used.state_radii.empty() ? tw : elementwise_max(tube_used, tw);
    double c = quad_trajectory_cost(task, nom) + 1e4 * violation_of(nom, tw);
    if (c < mean_cost) {
      mean_cost = c;
      mean = w;
    }
  }

  for (int pass = 0; pass < cfg.tube.max_passes; ++pass) {
    plan.passes = pass + 1;
    const std::vector<Vec> radii = coarse_radii(tube_used, model.dt, cfg.plan_dt, n_coarse);
    const std::vector<Vec> uradii = coarse_input_radii(tube_used, model.dt, cfg.plan_dt, n_coarse);
    const double margin = cfg.constraint_margin;
    // Tube prediction from the worst-case parametric acceleration at each candidate state.
    SequenceCost cost = [&](const InputBlocks & b) {
      Trajectory tr = simulate_blocks(model, x_k, t_k, b, cfg.block_dt, theta_hat, cfg.plan_dt, T_B);
      double J = quad_trajectory_cost(task, tr);
      double pen = 0.0;
      Vec r_last = radii.back();
      for (std::size_t k = 0; k < tr.size(); ++k) {
        Vec d = (model.regressor(tr.states[k], Vec::Zero(model.input_dim)).cwiseAbs() * half).tail(3);
        Vec r = radii[std::min(k, radii.size() - 1)];
        for (int i = 0; i < 3; ++i) {
          r(i) = std::max(r(i), pg * d(i) / cfg.kp);
          r(3 + i) = std::max(r(3 + i), pg * 0.2 * d(i));
        }
        r_last = r;
        pen += cons.state_violation(tr.states[k], Vec(r.array() + margin));
        if (k < tr.inputs.size()) {
          Vec ur = uradii[std::min(k, uradii.size() - 1)].cwiseMax(pg * d);
          pen += input_excess(cons.inputs, tr.inputs[k], ur);
        }
      }
      pen += 10.0 * quad_terminal_violation(task, tr.states.back(), r_last, margin);
      return J + 1e4 * pen;
    };
    Vec std0 = Vec::Constant(model.input_dim, cfg.init_std);
    SamplingResult res = cem_optimize(mean, std0, cons.inputs, cost, cfg.cem, derive_seed(seed, 1000 + pass));
    mean = res.blocks;
    Trajectory nom = fine(mean);
    TubeEstimate tube_new = tube_of(nom);
    spdlog::debug("plan_backup pass {}: cem cost {:.2f}, nominal cost {:.2f}, own-tube violation {:.4f}", pass, res.cost,
                  quad_trajectory_cost(task, nom), violation_of(nom, tube_new));
    if (offer(mean, nom, tube_new)) {
      break;
    }
    tube_used = elementwise_max(tube_used, tube_new);
    if (have_ok) {
      mean = best_ok_blocks;
    }
  }
  if (!have_ok) {
    plan.blocks = mean;
    plan.nominal = fine(mean);
    plan.tube = tube_of(plan.nominal);
    plan.cost = quad_trajectory_cost(task, plan.nominal);
    plan.certified = false;
    plan.diagnostic = "no nominal satisfies the tightened constraints";
    spdlog::debug("plan_backup at t={:.2f}: {}", t_k, plan.diagnostic);
    return plan;
  }
  plan.blocks = best_ok_blocks;
  plan.nominal = fine(best_ok_blocks);
  plan.tube = best_ok_tube;
  plan.cost = best_ok_cost;
  plan.tube.holdout_coverage = tube_coverage(
    model, plan.nominal, K, box, plan.tube, cfg.tube.n_holdout, derive_seed(seed, 0x401d));
  plan.certified = plan.tube.holdout_coverage >= 1.0;
  if (!plan.certified) {
    plan.diagnostic = "held-out rollouts left the tube";
  }
  return plan;
}

}  // namespace dualgk
