#pragma once

#include "dualgk/models.hpp"

#include <functional>
#include <vector>

namespace dualgk
{

// Piecewise-constant input sequence: blocks[j] is held on [t0 + j*block_dt, t0 + (j+1)*block_dt).
using InputBlocks = std::vector<Vec>;
using SequenceCost = std::function<double(const InputBlocks &)>;

struct CemConfig
{
  int samples{48};
  int iterations{8};
  int elites{6};
  double smoothing{0.2};  // weight kept on the previous mean / std
  double min_std_fraction{0.02};
};

struct MppiConfig
{
  int samples{64};
  int iterations{3};
  double temperature{1.0};  // relative to the cost spread of each batch
};

struct SamplingResult
{
  InputBlocks blocks;
  double cost{0.0};
  int evaluations{0};
};

// Cross-entropy method; the incoming mean is always evaluated so the result never regresses.
SamplingResult cem_optimize(
  const InputBlocks & mean, const Vec & init_std, const BoxSet & bounds, const SequenceCost & cost,
  const CemConfig & cfg, uint64_t seed);

// Path-integral update with exponentially weighted perturbations.
SamplingResult mppi_optimize(
  const InputBlocks & mean, const Vec & noise_std, const BoxSet & bounds, const SequenceCost & cost,
  const MppiConfig & cfg, uint64_t seed);

// Noise-free open-loop rollout over `duration` on a grid of step dt; step k uses block floor(k*dt/block_dt).
Trajectory simulate_blocks(
  const ModelSpec & model, const Vec & x0, double t0, const InputBlocks & blocks, double block_dt,
  const Vec & theta, double dt, double duration);

int block_count(double duration, double block_dt);

// Block averages of a trajectory's inputs.
InputBlocks blocks_from_trajectory(const Trajectory & traj, double block_dt, int n_blocks);

}  // namespace dualgk
