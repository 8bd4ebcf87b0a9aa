#include "dualgk/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace dualgk
{

bool BoxSet::contains(const Vec & x, double tol) const
{
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < lo(i) - tol || x(i) > hi(i) + tol) {
      return false;
    }
  }
  return true;
}

Vec BoxSet::clamp(const Vec & x) const
{
  return x.cwiseMax(lo).cwiseMin(hi);
}

const char * to_string(TrajectoryTag tag)
{
  switch (tag) {
    case TrajectoryTag::Backup:
      return "backup";
    case TrajectoryTag::Conservative:
      return "conservative";
    case TrajectoryTag::Informative:
      return "informative";
    case TrajectoryTag::Nominal:
      return "nominal";
    case TrajectoryTag::Fallback:
      return "fallback";
    case TrajectoryTag::Executed:
      return "executed";
  }
  return "unknown";
}

std::size_t Trajectory::index_at(double t) const
{
  require(!empty(), "empty trajectory");
  if (t <= times.front()) {
    return 0;
  }
  auto it = std::upper_bound(times.begin(), times.end(), t + 1e-9);
  std::size_t k = static_cast<std::size_t>(it - times.begin());
  return k == 0 ? 0 : std::min(k - 1, times.size() - 1);
}

Vec Trajectory::state_at(double t) const
{
  std::size_t k = index_at(t);
  if (k + 1 >= times.size()) {
    return states.back();
  }
  double span = times[k + 1] - times[k];
  double a = std::clamp((t - times[k]) / span, 0.0, 1.0);
  return (1.0 - a) * states[k] + a * states[k + 1];
}

Vec Trajectory::input_at(double t) const
{
  require(!inputs.empty(), "trajectory has no inputs");
  std::size_t k = index_at(t);
  return inputs[std::min(k, inputs.size() - 1)];
}

Trajectory Trajectory::restricted(double horizon) const
{
  Trajectory out;
  out.tag = tag;
  if (empty()) {
    return out;
  }
  double t_end = times.front() + horizon + 1e-9;
  for (std::size_t k = 0; k < times.size() && times[k] <= t_end; ++k) {
    out.times.push_back(times[k]);
    out.states.push_back(states[k]);
  }
  for (std::size_t k = 0; k + 1 < out.times.size(); ++k) {
    out.inputs.push_back(inputs[k]);
  }
  return out;
}

Trajectory Trajectory::slice(double t0, double t1) const
{
  Trajectory out;
  out.tag = tag;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] >= t0 - 1e-9 && times[k] <= t1 + 1e-9) {
      if (!out.times.empty()) {
        out.inputs.push_back(inputs[k - 1]);
      }
      out.times.push_back(times[k]);
      out.states.push_back(states[k]);
    }
  }
  return out;
}

void Trajectory::append(const Trajectory & tail)
{
  if (tail.empty()) {
    return;
  }
  if (empty()) {
    *this = tail;
    return;
  }
  require(std::abs(tail.times.front() - times.back()) < 1e-9, "append: time gap");
  for (std::size_t k = 1; k < tail.times.size(); ++k) {
    times.push_back(tail.times[k]);
    states.push_back(tail.states[k]);
  }
  inputs.insert(inputs.end(), tail.inputs.begin(), tail.inputs.end());
}

void check_dims(const ModelSpec & model, const Vec & x, const Vec & u, const Vec & theta)
{
  if (x.size() != model.state_dim || u.size() != model.input_dim || theta.size() != model.param_dim) {
    throw ContractViolation("dimension mismatch for model " + model.name);
  }
}

namespace
{

inline Vec rate(const ModelSpec & model, const Vec & x, const Vec & u, const Vec & theta)
{
  if (model.fused_rate) {
    return model.fused_rate(x, u, theta);
  }
  Vec r = model.f0(x);
  r.noalias() += model.regressor(x, u) * theta;
  r.noalias() += model.g0(x) * u;
  return r;
}

}  // namespace

Vec eval_dynamics(const ModelSpec & model, const Vec & x, const Vec & u, const Vec & theta, const Vec & w)
{
  check_dims(model, x, u, theta);
  require(w.size() == model.state_dim, "disturbance dimension mismatch");
  Vec r = model.f0(x);
  r.noalias() += model.regressor(x, u) * theta;
  r.noalias() += model.g0(x) * u;
  return r + w;
}

Vec integrate_step(
  const ModelSpec & model, const Vec & x, const Vec & u, const Vec & theta, const Vec & w, double dt)
{
  require(dt > 0.0, "integrate_step: dt must be positive");
  Vec k1 = rate(model, x, u, theta) + w;
  Vec k2 = rate(model, x + 0.5 * dt * k1, u, theta) + w;
  Vec k3 = rate(model, x + 0.5 * dt * k2, u, theta) + w;
  Vec k4 = rate(model, x + dt * k3, u, theta) + w;
  Vec next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw NumericalBlowup("non-finite state in " + model.name);
  }
  return next;
}

Vec sample_disturbance(const ModelSpec & model, Rng & rng)
{
  Vec w = Vec::Zero(model.state_dim);
  if (model.disturbance_bound <= 0.0) {
    return w;
  }
  std::uniform_real_distribution<double> dist(-model.disturbance_bound, model.disturbance_bound);
  for (int i = 0; i < model.state_dim; ++i) {
    w(i) = dist(rng);
  }
  return w;
}

RolloutResult rollout(
  const ModelSpec & model, const Policy & policy, const Vec & x0, double t0, double duration,
  const Vec & theta, Rng & rng, const RolloutOptions & opts)
{
  require(opts.dt > 0.0, "rollout: dt must be positive");
  RolloutResult res;
  int steps = static_cast<int>(std::llround(duration / opts.dt));
  if (steps > 0 && t0 + steps * opts.dt > t0 + duration + 1e-9) {
    --steps;
  }
  Vec x = x0;
  double t = t0;
  if (opts.record) {
    res.traj.times.reserve(steps + 1);
    res.traj.states.reserve(steps + 1);
    res.traj.inputs.reserve(steps);
    res.traj.times.push_back(t);
    res.traj.states.push_back(x);
  }
  Vec zero_w = Vec::Zero(model.state_dim);
  for (int k = 0; k < steps; ++k) {
    Vec u_raw = policy(t, x);
    if (!u_raw.allFinite()) {
      throw PolicyFailure("policy returned a non-finite input");
    }
    Vec u = model.input_bounds.clamp(u_raw);
    Vec w = opts.disturbed ? sample_disturbance(model, rng) : zero_w;
    bool keep_going = !opts.monitor || opts.monitor(t, x, u_raw);
    x = integrate_step(model, x, u, theta, w, opts.dt);
    t = t0 + (k + 1) * opts.dt;
    if (opts.record) {
      res.traj.inputs.push_back(u);
      res.traj.times.push_back(t);
      res.traj.states.push_back(x);
    }
    if (!keep_going) {
      res.stopped = true;
      break;
    }
  }
  res.final_state = x;
  res.final_time = t;
  return res;
}

Trajectory simulate_closed_loop(
  const ModelSpec & model, const Policy & policy, const Vec & x0, std::pair<double, double> t_span,
  const Vec & theta, uint64_t disturbance_seed)
{
  Rng rng(disturbance_seed);
  RolloutOptions opts;
  opts.dt = model.dt;
  auto res = rollout(model, policy, x0, t_span.first, t_span.second - t_span.first, theta, rng, opts);
  res.traj.tag = TrajectoryTag::Executed;
  return res.traj;
}

Policy open_loop_policy(const Trajectory & plan)
{
  auto shared = std::make_shared<const Trajectory>(plan);
  return [shared](double t, const Vec &) { return shared->input_at(t); };
}

RegressionTuple make_regression_tuple(
  const ModelSpec & model, const Trajectory & traj, double t, double window)
{
  require(window > 0.0, "regression window must be positive");
  if (traj.empty() || t - window < traj.times.front() - 1e-9 || t > traj.times.back() + 1e-9) {
    throw InsufficientData("regression window not covered by trajectory");
  }
  std::size_t i0 = traj.index_at(t - window);
  std::size_t i1 = traj.index_at(t);
  if (std::abs(traj.times[i0] - (t - window)) > 1e-9 || std::abs(traj.times[i1] - t) > 1e-9 || i1 <= i0) {
    throw InsufficientData("regression window not aligned with the trajectory grid");
  }
  RegressionTuple tup;
  tup.window = {t - window, t};
  tup.Y = traj.states[i1] - traj.states[i0];
  tup.F = Mat::Zero(model.state_dim, model.param_dim);
  for (std::size_t k = i0; k < i1; ++k) {
    const Vec & u = traj.inputs[k];
    double h = 0.5 * (traj.times[k + 1] - traj.times[k]);
    const Vec & xa = traj.states[k];
    const Vec & xb = traj.states[k + 1];
    tup.Y -= h * (model.f0(xa) + model.g0(xa) * u + model.f0(xb) + model.g0(xb) * u);
    tup.F += h * (model.regressor(xa, u) + model.regressor(xb, u));
  }
  return tup;
}

std::vector<RegressionTuple> regression_tuples(
  const ModelSpec & model, const Trajectory & traj, double window, double t_from, double t_to)
{
  std::vector<RegressionTuple> out;
  if (traj.size() < 2) {
    return out;
  }
  double dt = traj.times[1] - traj.times[0];
  int per_window = std::max(1, static_cast<int>(std::llround(window / dt)));
  std::size_t start = traj.index_at(t_from);
  for (std::size_t end = start + per_window; end < traj.size(); end += per_window) {
    if (traj.times[end] > t_to + 1e-9) {
      break;
    }
    out.push_back(make_regression_tuple(model, traj, traj.times[end], traj.times[end] - traj.times[end - per_window]));
  }
  return out;
}

double estimate_quadrature_margin(
  const ModelSpec & model, const Policy & excitation, const Vec & x0, double duration,
  const std::vector<Vec> & thetas, double window)
{
  const int refine = 10;
  double worst = 0.0;
  for (const Vec & theta : thetas) {
    Rng rng(0);
    RolloutOptions coarse_opts;
    coarse_opts.dt = model.dt;
    coarse_opts.disturbed = false;
    Trajectory coarse = rollout(model, excitation, x0, 0.0, duration, theta, rng, coarse_opts).traj;
    // Replay the coarse inputs on the refined grid.
    auto inputs = std::make_shared<const Trajectory>(coarse);
    Policy replay = [inputs](double t, const Vec &) { return inputs->input_at(t); };
    RolloutOptions fine_opts = coarse_opts;
    fine_opts.dt = model.dt / refine;
    Trajectory fine = rollout(model, replay, x0, 0.0, coarse.duration(), theta, rng, fine_opts).traj;
    auto tc = regression_tuples(model, coarse, window, 0.0, coarse.end_time());
    auto tf = regression_tuples(model, fine, window, 0.0, coarse.end_time());
    std::size_t n = std::min(tc.size(), tf.size());
    for (std::size_t j = 0; j < n; ++j) {
      Vec rc = tc[j].Y - tc[j].F * theta;
      Vec rf = tf[j].Y - tf[j].F * theta;
      worst = std::max(worst, (rc - rf).cwiseAbs().maxCoeff());
      worst = std::max(worst, rf.cwiseAbs().maxCoeff());
    }
  }
  return 4.0 * worst + 1e-9;
}

double smid_epsilon(const ModelSpec & model, double window, double quadrature_margin)
{
  return model.disturbance_bound * window * std::sqrt(static_cast<double>(model.state_dim)) + quadrature_margin;
}

ModelSpec make_decay_model()
{
  ModelSpec m;
  m.name = "decay";
  m.state_dim = 1;
  m.input_dim = 1;
  m.param_dim = 1;
  m.f0 = [](const Vec & x) { return Vec(-x); };
  m.g0 = [](const Vec &) { return Mat::Zero(1, 1); };
  m.regressor = [](const Vec &, const Vec &) { return Mat::Ones(1, 1); };
  m.true_theta = vec({0.0});
  m.disturbance_bound = 0.0;
  m.state_bounds = {vec({-1e9}), vec({1e9})};
  m.input_bounds = {vec({-1e9}), vec({1e9})};
  m.dt = 0.1;
  return m;
}

}  // namespace dualgk
