#include "dualgk/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dualgk
{

Mat information_matrix(const ModelSpec & model, const Trajectory & traj, const InfoObjective & info)
{
  const int p = model.param_dim;
  const int n = model.state_dim;
  require(info.W_theta.size() == 0 || (info.W_theta.rows() == n && info.W_theta.cols() == n),
          "information_matrix: W_theta must be n x n");
  Mat W = info.W_theta.size() == 0 ? Mat(Mat::Identity(n, n)) : info.W_theta;
  Mat I = Mat::Zero(p, p);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const Vec & u = traj.inputs[k];
    double h = 0.5 * (traj.times[k + 1] - traj.times[k]);
    Mat a = model.regressor(traj.states[k], u);
    Mat b = model.regressor(traj.states[k + 1], u);
    I += h * (a.transpose() * W * a + b.transpose() * W * b);
  }
  return I;
}

double information_logdet(const ModelSpec & model, const Trajectory & traj, const InfoObjective & info)
{
  Mat I = information_matrix(model, traj, info);
  Mat R = I + info.epsilon_reg * Mat::Identity(I.rows(), I.cols());
  Eigen::MatrixXd Rd = R;
  Eigen::LLT<Eigen::MatrixXd> llt(Rd);
  if (llt.info() != Eigen::Success) {
    return -std::numeric_limits<double>::infinity();
  }
  double out = 0.0;
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    out += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return out;
}

namespace
{

Vec normalized_error(const Vec & x, const Vec & target, const Vec & scale)
{
  return (x - target).cwiseQuotient(scale);
}

}  // namespace

InformativeResult plan_informative_segment(
  const ModelSpec & model, const Vec & x_k, double t_k, const Vec & theta_hat, double horizon,
  const Vec & terminal_state, const Vec & state_scale, const InfoObjective & info, const StageCostFn & stage_cost,
  const InputBlocks & warm_blocks, const InformativeConfig & cfg, uint64_t seed)
{
  require(horizon > 0.0, "plan_informative_segment: horizon must be positive");
  require(!warm_blocks.empty(), "plan_informative_segment: warm start required");
  const int n_blocks = block_count(horizon, cfg.block_dt);
  InputBlocks mean;
  for (int j = 0; j < n_blocks; ++j) {
    mean.push_back(warm_blocks[std::min<std::size_t>(j, warm_blocks.size() - 1)]);
  }
  SequenceCost cost = [&](const InputBlocks & b) {
    Trajectory tr = simulate_blocks(model, x_k, t_k, b, cfg.block_dt, theta_hat, cfg.plan_dt, horizon);
    double J = stage_cost(tr);
    if (info.gamma != 0.0) {
      J -= info.gamma * information_logdet(model, tr, info);
    }
    J += cfg.terminal_weight * normalized_error(tr.states.back(), terminal_state, state_scale).squaredNorm();
    return J;
  };
  Vec std0 = Vec::Constant(model.input_dim, cfg.init_std);
  SamplingResult res = cem_optimize(mean, std0, model.input_bounds, cost, cfg.cem, seed);
  InputBlocks blocks = res.blocks;

  // Terminal shooting on the last blocks, on the model grid.
  auto terminal = [&](const InputBlocks & b) {
    Trajectory tr = simulate_blocks(model, x_k, t_k, b, cfg.block_dt, theta_hat, model.dt, horizon);
    return normalized_error(tr.states.back(), terminal_state, state_scale);
  };
  const int m = model.input_dim;
  const int r = std::min(cfg.refine_blocks, n_blocks);
  const int nv = r * m;
  Vec e = terminal(blocks);
  for (int it = 0; it < cfg.refine_iterations && e.lpNorm<Eigen::Infinity>() > 0.1 * cfg.delta_term; ++it) {
    Eigen::MatrixXd J(e.size(), nv);
    const double h = 1e-5;
    for (int v = 0; v < nv; ++v) {
      InputBlocks bp = blocks;
      bp[n_blocks - r + v / m](v % m) += h;
      J.col(v) = (terminal(bp) - e) / h;
    }
    Eigen::MatrixXd A = J.transpose() * J;
    A.diagonal().array() += 1e-9 * (1.0 + A.diagonal().maxCoeff());
    Eigen::VectorXd step = -A.ldlt().solve(J.transpose() * Eigen::VectorXd(e));
    double scale = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 6; ++ls, scale *= 0.5) {
      InputBlocks trial = blocks;
      for (int v = 0; v < nv; ++v) {
        Vec & u = trial[n_blocks - r + v / m];
        u(v % m) += scale * step(v);
        u = model.input_bounds.clamp(u);
      }
      Vec e2 = terminal(trial);
      if (e2.squaredNorm() < e.squaredNorm()) {
        blocks = trial;
        e = e2;
        improved = true;
        break;
      }
    }
    if (!improved) {
      break;
    }
  }

  InformativeResult out;
  out.blocks = blocks;
  out.traj = simulate_blocks(model, x_k, t_k, blocks, cfg.block_dt, theta_hat, model.dt, horizon);
  out.traj.tag = TrajectoryTag::Informative;
  out.terminal_error = normalized_error(out.traj.states.back(), terminal_state, state_scale).lpNorm<Eigen::Infinity>();
  out.recoverable = out.terminal_error <= cfg.delta_term;
  out.logdet = information_logdet(model, out.traj, info);
  out.stage_cost = stage_cost(out.traj);
  return out;
}

}  // namespace dualgk
