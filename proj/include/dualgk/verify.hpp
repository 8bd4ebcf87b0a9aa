#pragma once

#include "dualgk/planners.hpp"
#include "dualgk/smid.hpp"

#include <functional>

namespace dualgk
{

struct FailureModes
{
  int state_constraint{0};
  int input_constraint{0};
  int terminal_fallback_set{0};
};

struct SafetyVerdict
{
  double p_safe{0.0};
  int n_rollouts{0};
  int n_safe{0};
  bool accepted{false};
  FailureModes failure_modes;
  double mean_cost{0.0};  // over all rollouts, when a cost functional is supplied
};

struct FallbackSpec
{
  Policy policy;
  double T_fb{4.0};
  std::function<bool(const Vec &)> fallback_set;
};

struct SafetyConstraints
{
  std::function<bool(const Vec &)> state_admissible;
  BoxSet inputs;
  double input_tolerance{1e-9};
};

using RolloutCost = std::function<double(const Trajectory &)>;

bool verdict_accepts(int n_safe, int n_rollouts, double delta);

// Candidate over [t_k, t_k + horizon], then the fallback over T_fb; theta ~ U(box), w ~ U(W).
// early_reject stops once acceptance is impossible; the verdict then covers the rollouts run.
SafetyVerdict verify_policy(
  const ModelSpec & model, const Policy & candidate, double horizon, const Vec & x_k, double t_k,
  const ParameterBox & box, const FallbackSpec & fb, const SafetyConstraints & cons, int n, double delta,
  uint64_t seed, const RolloutCost & cost = nullptr, bool early_reject = false);

struct TubeVerdict
{
  bool valid{false};
  TubeEstimate tube;
  double violation{0.0};
};

TubeVerdict verify_tube_candidate(
  const ModelSpec & model, const Trajectory & informative, const ParameterBox & box, const TubeConstraints & cons,
  const Mat & K, const TubeConfig & cfg, uint64_t seed);

}  // namespace dualgk
