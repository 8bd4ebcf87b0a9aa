#include "dualgk/sampling_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <execution>
#include <numeric>

namespace dualgk
{

namespace
{

InputBlocks perturb(const InputBlocks & mean, const std::vector<Vec> & stds, const BoxSet & bounds, Rng & rng)
{
  std::normal_distribution<double> n01(0.0, 1.0);
  InputBlocks out(mean.size());
  for (std::size_t j = 0; j < mean.size(); ++j) {
    Vec u = mean[j];
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u(i) += stds[j](i) * n01(rng);
    }
    out[j] = bounds.clamp(u);
  }
  return out;
}

std::vector<double> evaluate(const std::vector<InputBlocks> & batch, const SequenceCost & cost)
{
  std::vector<double> out(batch.size());
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t s) {
    double c = cost(batch[s]);
    out[s] = std::isfinite(c) ? c : 1e300;
  });
  return out;
}

}  // namespace

SamplingResult cem_optimize(
  const InputBlocks & mean0, const Vec & init_std, const BoxSet & bounds, const SequenceCost & cost,
  const CemConfig & cfg, uint64_t seed)
{
  Rng rng(seed);
  InputBlocks mean = mean0;
  for (auto & u : mean) {
    u = bounds.clamp(u);
  }
  std::vector<Vec> stds(mean.size(), init_std);
  SamplingResult best{mean, cost(mean), 1};
  const int elites = std::max(1, std::min(cfg.elites, cfg.samples));
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<InputBlocks> batch;
    batch.reserve(cfg.samples);
    batch.push_back(mean);
    for (int s = 1; s < cfg.samples; ++s) {
      batch.push_back(perturb(mean, stds, bounds, rng));
    }
    std::vector<double> costs = evaluate(batch, cost);
    best.evaluations += cfg.samples;
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
    if (costs[order[0]] < best.cost) {
      best.cost = costs[order[0]];
      best.blocks = batch[order[0]];
    }
    for (std::size_t j = 0; j < mean.size(); ++j) {
      Vec m = Vec::Zero(mean[j].size());
      for (int e = 0; e < elites; ++e) {
        m += batch[order[e]][j];
      }
      m /= elites;
      Vec var = Vec::Zero(m.size());
      for (int e = 0; e < elites; ++e) {
        var += (batch[order[e]][j] - m).cwiseAbs2();
      }
      Vec sd = (var / elites).cwiseSqrt();
      mean[j] = cfg.smoothing * mean[j] + (1.0 - cfg.smoothing) * m;
      stds[j] = (cfg.smoothing * stds[j] + (1.0 - cfg.smoothing) * sd).cwiseMax(cfg.min_std_fraction * init_std);
    }
  }
  double c = cost(mean);
  ++best.evaluations;
  if (c < best.cost) {
    best.cost = c;
    best.blocks = mean;
  }
  return best;
}

SamplingResult mppi_optimize(
  const InputBlocks & mean0, const Vec & noise_std, const BoxSet & bounds, const SequenceCost & cost,
  const MppiConfig & cfg, uint64_t seed)
{
  Rng rng(seed);
  InputBlocks mean = mean0;
  for (auto & u : mean) {
    u = bounds.clamp(u);
  }
  std::vector<Vec> stds(mean.size(), noise_std);
  SamplingResult best{mean, cost(mean), 1};
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<InputBlocks> batch;
    batch.reserve(cfg.samples);
    batch.push_back(mean);
    for (int s = 1; s < cfg.samples; ++s) {
      batch.push_back(perturb(mean, stds, bounds, rng));
    }
    std::vector<double> costs = evaluate(batch, cost);
    best.evaluations += cfg.samples;
    double cmin = *std::min_element(costs.begin(), costs.end());
    std::vector<double> sorted = costs;
    std::sort(sorted.begin(), sorted.end());
    double spread = std::max(1e-12, sorted[sorted.size() / 2] - cmin);
    std::vector<double> w(costs.size());
    double wsum = 0.0;
    for (std::size_t s = 0; s < costs.size(); ++s) {
      w[s] = std::exp(-(costs[s] - cmin) / (cfg.temperature * spread));
      wsum += w[s];
    }
    for (std::size_t j = 0; j < mean.size(); ++j) {
      Vec m = Vec::Zero(mean[j].size());
      for (std::size_t s = 0; s < batch.size(); ++s) {
        m += (w[s] / wsum) * batch[s][j];
      }
      mean[j] = bounds.clamp(m);
    }
    auto arg = std::min_element(costs.begin(), costs.end()) - costs.begin();
    if (costs[arg] < best.cost) {
      best.cost = costs[arg];
      best.blocks = batch[arg];
    }
  }
  double c = cost(mean);
  ++best.evaluations;
  if (c < best.cost) {
    best.cost = c;
    best.blocks = mean;
  }
  return best;
}

int block_count(double duration, double block_dt)
{
  return std::max(1, static_cast<int>(std::ceil(duration / block_dt - 1e-9)));
}

Trajectory simulate_blocks(
  const ModelSpec & model, const Vec & x0, double t0, const InputBlocks & blocks, double block_dt,
  const Vec & theta, double dt, double duration)
{
  require(!blocks.empty(), "simulate_blocks: no input blocks");
  const int steps = std::max(1, static_cast<int>(std::llround(duration / dt)));
  Trajectory tr;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  tr.inputs.reserve(steps);
  Vec x = x0;
  tr.times.push_back(t0);
  tr.states.push_back(x);
  Vec zero = Vec::Zero(model.state_dim);
  const int last = static_cast<int>(blocks.size()) - 1;
  for (int k = 0; k < steps; ++k) {
    int j = std::min(last, static_cast<int>(std::floor(k * dt / block_dt + 1e-9)));
    Vec u = model.input_bounds.clamp(blocks[j]);
    x = integrate_step(model, x, u, theta, zero, dt);
    tr.inputs.push_back(u);
    tr.times.push_back(t0 + (k + 1) * dt);
    tr.states.push_back(x);
  }
  return tr;
}

InputBlocks blocks_from_trajectory(const Trajectory & traj, double block_dt, int n_blocks)
{
  InputBlocks out;
  if (traj.inputs.empty()) {
    return out;
  }
  const double t0 = traj.start_time();
  for (int j = 0; j < n_blocks; ++j) {
    double a = t0 + j * block_dt;
    double b = a + block_dt;
    Vec acc = Vec::Zero(traj.inputs.front().size());
    int count = 0;
    for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
      if (traj.times[k] >= a - 1e-9 && traj.times[k] < b - 1e-9) {
        acc += traj.inputs[k];
        ++count;
      }
    }
    out.push_back(count > 0 ? Vec(acc / count) : (out.empty() ? traj.inputs.back() : out.back()));
  }
  return out;
}

}  // namespace dualgk
