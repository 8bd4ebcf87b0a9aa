#pragma once

#include "dualgk/types.hpp"

#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace dualgk
{

struct BoxSet
{
  Vec lo;
  Vec hi;

  bool contains(const Vec & x, double tol = 0.0) const;
  Vec clamp(const Vec & x) const;
};

struct ModelSpec
{
  std::string name;
  int state_dim{0};
  int input_dim{0};
  int param_dim{0};
  std::function<Vec(const Vec &)> f0;
  std::function<Mat(const Vec &)> g0;
  std::function<Mat(const Vec &, const Vec &)> regressor;
  // Optional fused f0 + Phi*theta + g0*u, must agree with the split form.
  std::function<Vec(const Vec &, const Vec &, const Vec &)> fused_rate;
  Vec true_theta;
  double disturbance_bound{0.0};
  BoxSet state_bounds;
  BoxSet input_bounds;
  double dt{0.02};
};

enum class TrajectoryTag { Backup, Conservative, Informative, Nominal, Fallback, Executed };

const char * to_string(TrajectoryTag tag);

// inputs[k] is held on [times[k], times[k+1]).
struct Trajectory
{
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  TrajectoryTag tag{TrajectoryTag::Nominal};

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double start_time() const { return times.front(); }
  double end_time() const { return times.back(); }
  double duration() const { return empty() ? 0.0 : times.back() - times.front(); }

  std::size_t index_at(double t) const;
  Vec state_at(double t) const;
  Vec input_at(double t) const;
  // Prefix covering [start, start + horizon].
  Trajectory restricted(double horizon) const;
  // Grid points within [t0, t1].
  Trajectory slice(double t0, double t1) const;
  void append(const Trajectory & tail);
};

struct RegressionTuple
{
  Vec Y;
  Mat F;
  std::pair<double, double> window;
};

using Policy = std::function<Vec(double, const Vec &)>;
using Rng = std::mt19937_64;

void check_dims(const ModelSpec & model, const Vec & x, const Vec & u, const Vec & theta);

Vec eval_dynamics(const ModelSpec & model, const Vec & x, const Vec & u, const Vec & theta, const Vec & w);

Vec integrate_step(
  const ModelSpec & model, const Vec & x, const Vec & u, const Vec & theta, const Vec & w, double dt);

Vec sample_disturbance(const ModelSpec & model, Rng & rng);

// Per-step hook; returning false stops the rollout after the current step.
using StepMonitor = std::function<bool(double t, const Vec & x, const Vec & u_raw)>;

struct RolloutOptions
{
  double dt{0.02};
  bool disturbed{true};
  bool record{true};
  StepMonitor monitor;
};

struct RolloutResult
{
  Trajectory traj;
  Vec final_state;
  double final_time{0.0};
  bool stopped{false};
};

// Shared simulation kernel: clip to U, hold u and w over each step.
RolloutResult rollout(
  const ModelSpec & model, const Policy & policy, const Vec & x0, double t0, double duration,
  const Vec & theta, Rng & rng, const RolloutOptions & opts);

Trajectory simulate_closed_loop(
  const ModelSpec & model, const Policy & policy, const Vec & x0, std::pair<double, double> t_span,
  const Vec & theta, uint64_t disturbance_seed);

Policy open_loop_policy(const Trajectory & plan);

RegressionTuple make_regression_tuple(
  const ModelSpec & model, const Trajectory & traj, double t, double window);

// Consecutive non-overlapping windows ending on grid points inside [t_from, t_to].
std::vector<RegressionTuple> regression_tuples(
  const ModelSpec & model, const Trajectory & traj, double window, double t_from, double t_to);

// Quadrature/integration slack per window component, from a 10x refined reference.
double estimate_quadrature_margin(
  const ModelSpec & model, const Policy & excitation, const Vec & x0, double duration,
  const std::vector<Vec> & thetas, double window);

double smid_epsilon(const ModelSpec & model, double window, double quadrature_margin);

// Test model: xdot = -x (scalar), with an unused unit regressor column.
ModelSpec make_decay_model();

}  // namespace dualgk
