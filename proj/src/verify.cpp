#include "dualgk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <execution>
#include <numeric>

namespace dualgk
{

bool verdict_accepts(int n_safe, int n_rollouts, double delta)
{
  return static_cast<double>(n_safe) >= (1.0 - delta) * static_cast<double>(n_rollouts) - 1e-9;
}

SafetyVerdict verify_policy(
  const ModelSpec & model, const Policy & candidate, double horizon, const Vec & x_k, double t_k,
  const ParameterBox & box, const FallbackSpec & fb, const SafetyConstraints & cons, int n, double delta,
  uint64_t seed, const RolloutCost & cost, bool early_reject)
{
  require(n >= 1, "verify_policy: need at least one rollout");
  require(delta > 0.0 && delta < 1.0, "verify_policy: delta must lie in (0,1)");
  require(fb.T_fb > 0.0, "verify_policy: T_fb must be positive");
  enum Outcome : char { Safe, StateFail, InputFail, TerminalFail };
  std::vector<char> outcome(static_cast<std::size_t>(n), Safe);
  std::vector<double> costs(static_cast<std::size_t>(n), 0.0);
  std::vector<std::size_t> idx(outcome.size());
  std::iota(idx.begin(), idx.end(), 0);
  const double t_switch = t_k + horizon;
  auto run_one = [&](std::size_t l) {
    Rng rng(derive_seed(seed, l));
    Vec theta = box.sample(rng);
    Policy combined = [&](double t, const Vec & x) -> Vec {
      return t < t_switch - 1e-9 ? candidate(t, x) : fb.policy(t, x);
    };
    char status = Safe;
    RolloutOptions opts;
    opts.dt = model.dt;
    opts.record = static_cast<bool>(cost);
    opts.monitor = [&](double, const Vec & x, const Vec & u_raw) {
      if (!cons.state_admissible(x)) {
        status = StateFail;
        return false;
      }
      for (Eigen::Index i = 0; i < u_raw.size(); ++i) {
        if (u_raw(i) < cons.inputs.lo(i) - cons.input_tolerance || u_raw(i) > cons.inputs.hi(i) + cons.input_tolerance) {
          status = InputFail;
          return false;
        }
      }
      return true;
    };
    try {
      RolloutResult res = rollout(model, combined, x_k, t_k, horizon + fb.T_fb, theta, rng, opts);
      if (status == Safe && !cons.state_admissible(res.final_state)) {
        status = StateFail;
      }
      if (status == Safe && !fb.fallback_set(res.final_state)) {
        status = TerminalFail;
      }
      if (cost) {
        costs[l] = cost(res.traj);
      }
    } catch (const NumericalBlowup &) {
      status = StateFail;
    } catch (const PolicyFailure &) {
      status = InputFail;
    }
    outcome[l] = status;
  };
  std::size_t evaluated = outcome.size();
  if (early_reject) {
    // Batches in index order keep the verdict independent of scheduling.
    const auto allowed = static_cast<std::size_t>(n) - static_cast<std::size_t>(std::ceil((1.0 - delta) * n - 1e-9));
    constexpr std::size_t batch = 25;
    std::size_t failures = 0;
    evaluated = 0;
    while (evaluated < outcome.size() && failures <= allowed) {
      const std::size_t end = std::min(outcome.size(), evaluated + batch);
      std::for_each(std::execution::par, idx.begin() + static_cast<std::ptrdiff_t>(evaluated),
                    idx.begin() + static_cast<std::ptrdiff_t>(end), run_one);
      for (std::size_t l = evaluated; l < end; ++l) {
        failures += outcome[l] != Safe ? 1 : 0;
      }
      evaluated = end;
    }
  } else {
    std::for_each(std::execution::par, idx.begin(), idx.end(), run_one);
  }
  outcome.resize(evaluated);
  costs.resize(evaluated);
  SafetyVerdict v;
  v.n_rollouts = static_cast<int>(evaluated);
  for (char o : outcome) {
    switch (o) {
      case Safe: ++v.n_safe; break;
      case StateFail: ++v.failure_modes.state_constraint; break;
      case InputFail: ++v.failure_modes.input_constraint; break;
      default: ++v.failure_modes.terminal_fallback_set; break;
    }
  }
  v.p_safe = static_cast<double>(v.n_safe) / v.n_rollouts;
  v.accepted = static_cast<int>(evaluated) == n && verdict_accepts(v.n_safe, n, delta);
  if (cost) {
    v.mean_cost = std::accumulate(costs.begin(), costs.end(), 0.0) / v.n_rollouts;
  }
  return v;
}

TubeVerdict verify_tube_candidate(
  const ModelSpec & model, const Trajectory & informative, const ParameterBox & box, const TubeConstraints & cons,
  const Mat & K, const TubeConfig & cfg, uint64_t seed)
{
  TubeVerdict out;
  out.tube = estimate_tube(model, informative, K, box, cfg.n_tube, cfg.inflation, seed, cfg.floor_time);
  out.violation = tube_violation(cons, informative, out.tube);
  out.valid = out.violation <= 0.0;
  return out;
}

}  // namespace dualgk
