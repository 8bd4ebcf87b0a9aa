#include "dualgk/shrinkage.hpp"

#include "dualgk/linprog.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <execution>
#include <limits>
#include <numeric>

namespace dualgk
{

ShrinkagePrediction predict_rollout(
  const ModelSpec & model, const Policy & candidate, const Vec & x_k, double t_k, double horizon,
  const ParameterBox & box, const DirectionSet & dirs, const RolloutPredictorConfig & cfg, uint64_t seed)
{
  require(cfg.n_rollouts >= 1, "predict_rollout: need at least one rollout");
  ShrinkagePrediction pred;
  pred.method = PredictorKind::Rollout;
  const std::size_t N = static_cast<std::size_t>(cfg.n_rollouts);
  pred.per_rollout.assign(N, 0.0);
  pred.post_boxes.assign(N, box);
  std::vector<char> blown(N, 0);
  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t l) {
    Rng rng(derive_seed(seed, l));
    Vec theta = box.sample(rng);
    RolloutOptions opts;
    opts.dt = cfg.dt;
    try {
      Trajectory traj = rollout(model, candidate, x_k, t_k, horizon, theta, rng, opts).traj;
      auto tuples = regression_tuples(model, traj, cfg.window, t_k, traj.end_time());
      ParameterBox post = smid_refine(box, tuples, cfg.eps).box;
      pred.post_boxes[l] = post;
      pred.per_rollout[l] = avg_width_reduction(box, post, dirs);
    } catch (const NumericalBlowup &) {
      blown[l] = 1;
    }
  });
  pred.flagged = static_cast<int>(std::count(blown.begin(), blown.end(), 1));
  if (pred.flagged > 0) {
    spdlog::debug("predict_rollout: {} rollouts blew up and contribute zero", pred.flagged);
  }
  if (cfg.aggregation == Aggregation::Mean) {
    pred.delta_xi = std::accumulate(pred.per_rollout.begin(), pred.per_rollout.end(), 0.0) / static_cast<double>(N);
  } else {
    std::vector<double> sorted = pred.per_rollout;
    std::sort(sorted.begin(), sorted.end());
    std::size_t k = static_cast<std::size_t>(std::floor(cfg.quantile * static_cast<double>(N - 1)));
    pred.delta_xi = sorted[k];
  }
  return pred;
}

StackedRegressor stack_regressor(const ModelSpec & model, const Trajectory & planned, int sample_stride)
{
  require(sample_stride >= 1, "stack_regressor: stride must be >= 1");
  if (planned.empty()) {
    throw InsufficientData("stack_regressor: empty trajectory");
  }
  std::vector<std::size_t> picks;
  for (std::size_t k = 0; k < planned.size(); k += static_cast<std::size_t>(sample_stride)) {
    picks.push_back(k);
  }
  const int n = model.state_dim;
  StackedRegressor out;
  out.A.resize(static_cast<Eigen::Index>(picks.size()) * n, model.param_dim);
  for (std::size_t j = 0; j < picks.size(); ++j) {
    std::size_t k = picks[j];
    Vec u = planned.inputs.empty() ? Vec::Zero(model.input_dim) : planned.inputs[std::min(k, planned.inputs.size() - 1)];
    out.A.block(static_cast<Eigen::Index>(j) * n, 0, n, model.param_dim) = model.regressor(planned.states[k], u);
  }
  return out;
}

double error_set_support(const Eigen::MatrixXd & A, double wbar, const Vec & d)
{
  L1Preimage pre = min_l1_preimage(A, Eigen::VectorXd(d));
  if (!pre.feasible) {
    return std::numeric_limits<double>::infinity();
  }
  return 2.0 * wbar * pre.l1;
}

ShrinkagePrediction predict_consistency(
  const StackedRegressor & stacked, double wbar, const ParameterBox & box, const DirectionSet & dirs)
{
  require(wbar >= 0.0, "predict_consistency: wbar must be non-negative");
  ShrinkagePrediction pred;
  pred.method = PredictorKind::Consistency;
  double total = 0.0;
  for (const auto & d : dirs.dirs) {
    double w0 = width(box, d);
    double h = error_set_support(stacked.A, wbar, d);
    double w_post = std::min(w0, 2.0 * h);
    pred.post_widths.push_back(w_post);
    total += w0 - w_post;
  }
  pred.delta_xi = dirs.dirs.empty() ? 0.0 : total / static_cast<double>(dirs.dirs.size());
  return pred;
}

}  // namespace dualgk
