#include "dualgk/bench.hpp"

#include <algorithm>
#include <cmath>
#include <execution>
#include <filesystem>
#include <numeric>

namespace dualgk
{

Scenario apply_overrides(Scenario s, const Overrides & o)
{
  if (o.method) {
    s.method = *o.method;
    if (s.model != ModelKind::Racing && s.method != Method::DualGatekeeper && s.method != Method::NominalGk) {
      throw ScenarioError("method: quadrotor scenarios support dual_gatekeeper and nominal_gk (robust baseline)");
    }
  }
  if (o.budget_pct) {
    if (*o.budget_pct < 0.0) {
      throw ScenarioError("budget.value: must be non-negative");
    }
    s.budget.percent = true;
    s.budget.value = *o.budget_pct;
  }
  if (o.rollouts) {
    if (*o.rollouts < 1) {
      throw ScenarioError("engine.shrinkage_rollouts: must be at least 1");
    }
    s.engine.n_shrinkage_rollouts = *o.rollouts;
  }
  if (s.model == ModelKind::Racing && s.budget.percent) {
    throw ScenarioError("budget.mode: racing budgets are absolute (progress metres); percent is not supported");
  }
  return s;
}

namespace
{

double quad_quadrature_margin(const Scenario & s, const ModelSpec & model)
{
  if (s.smid.quadrature_margin) {
    return *s.smid.quadrature_margin;
  }
  const Vec hover = hover_input(s.quad.params);
  const double a = 0.5 * s.quad.params.accel_limit;
  Policy excite = [hover, a](double t, const Vec &) {
    Vec u = hover;
    u(0) += a * std::sin(1.3 * t);
    u(1) += a * std::sin(0.9 * t + 1.0);
    u(2) += a * std::sin(1.7 * t + 2.0);
    return u;
  };
  return estimate_quadrature_margin(model, excite, s.x0, 6.0, s.box0.vertices(), s.smid.window);
}

double racing_quadrature_margin(const Scenario & s, const ModelSpec & model, const RacingMissionConfig & cfg)
{
  if (s.smid.quadrature_margin) {
    return *s.smid.quadrature_margin;
  }
  // Limit driving at each vertex and the center; runs that leave the corridor fall back to the
  // fallback policy since such states end the mission anyway.
  std::vector<Vec> thetas = s.box0.vertices();
  thetas.push_back(s.box0.midpoint());
  const Policy fallback = fallback_policy(cfg.track, cfg.car, cfg.fallback);
  double margin = 0.0;
  for (const Vec & mu : thetas) {
    Policy excite = racing_excitation_policy(cfg.track, cfg.car, cfg.planner, mu(0));
    Rng rng(0);
    RolloutOptions opts;
    opts.dt = model.dt;
    opts.disturbed = false;
    const Trajectory probe = rollout(model, excite, s.x0, 0.0, 10.0, mu, rng, opts).traj;
    const bool stays = std::all_of(probe.states.begin(), probe.states.end(), [&](const Vec & x) {
      return car_state_admissible(*cfg.track, cfg.car, x);
    });
    margin = std::max(
      margin, estimate_quadrature_margin(model, stays ? excite : fallback, s.x0, 10.0, {mu}, s.smid.window));
  }
  return margin;
}

SmidSettings smid_settings(const Scenario & s, bool enabled, double margin)
{
  SmidSettings out;
  out.enabled = enabled;
  out.window = s.smid.window;
  out.quadrature_margin = margin;
  out.stack.capacity = s.smid.stack_capacity;
  out.stack.admission_threshold = s.smid.admission_threshold;
  out.stack.min_fill = s.smid.min_fill;
  return out;
}

MissionLog run_quad(const Scenario & s, const ModelSpec & model, bool proposed, double budget, uint64_t seed)
{
  QuadMissionConfig cfg;
  cfg.task = s.quad.task;
  cfg.backup = s.quad.backup;
  cfg.informative = s.quad.informative;
  cfg.info = s.quad.info;
  cfg.engine = s.engine;
  cfg.shrinkage_rollouts = s.engine.n_shrinkage_rollouts;
  cfg.smid = smid_settings(s, proposed, quad_quadrature_margin(s, model));
  cfg.explore = proposed;
  cfg.budget = proposed ? budget : 0.0;
  cfg.uses_ledger = proposed;
  MissionLog log = run_tube_mission(model, cfg, s.x0, s.box0, seed);
  log.method = proposed ? "dual_gatekeeper" : "nominal_gk";
  return log;
}

RacingMissionConfig racing_config(const Scenario & s, const ModelSpec & model, uint64_t seed)
{
  RacingMissionConfig cfg;
  cfg.track = std::make_shared<const Track>(s.racing.waypoints, s.racing.half_width);
  cfg.car = s.racing.car;
  cfg.car.mu_bounds = s.box0;
  cfg.fallback = s.racing.fallback;
  cfg.planner = s.racing.planner;
  cfg.info = s.racing.info;
  cfg.engine = s.engine;
  cfg.T_B = s.racing.T_B;
  cfg.T_fb = s.racing.T_fb;
  cfg.n_verify = s.racing.n_verify;
  cfg.delta = s.racing.delta;
  cfg.laps = s.racing.laps;
  cfg.time_limit = s.racing.time_limit;
  cfg.mu_planned = racing_mu_planned(s, seed);
  cfg.budget = s.budget.value;
  cfg.shrinkage_rollouts = s.engine.n_shrinkage_rollouts;
  const double margin = racing_quadrature_margin(s, model, cfg);
  cfg.smid = smid_settings(s, true, margin);
  return cfg;
}

}  // namespace

std::vector<double> reduction_pct(const ParameterBox & before, const ParameterBox & after)
{
  std::vector<double> out;
  for (int i = 0; i < before.dim(); ++i) {
    const double w0 = before.hi(i) - before.lo(i);
    const double w1 = after.hi(i) - after.lo(i);
    out.push_back(w0 > 0.0 ? std::clamp(100.0 * (w0 - w1) / w0, 0.0, 100.0) : 0.0);
  }
  return out;
}

double compute_baseline_cost(const Scenario & s, uint64_t seed)
{
  const ModelSpec model = build_model(s);
  double cost = 0.0;
  if (s.model == ModelKind::Racing) {
    RacingMissionConfig cfg = racing_config(s, model, seed);
    MissionLog log = run_racing_mission(model, cfg, Method::Fallback, s.x0, s.box0, seed);
    if (!log.safe) {
      throw ScenarioError("baseline: fallback-only run was unsafe (" + log.diagnostic + ")");
    }
    cost = log.total_cost;
  } else {
    MissionLog log = run_quad(s, model, false, 0.0, seed);
    if (log.aborted) {
      throw ScenarioError("baseline: robust backup infeasible (" + log.diagnostic + ")");
    }
    cost = log.total_cost;
  }
  if (!(cost > 0.0) || !std::isfinite(cost)) {
    throw ScenarioError("baseline: cost must be positive to normalize percentages");
  }
  return cost;
}

RunResult run_scenario(const Scenario & scenario, uint64_t seed, const Overrides & o)
{
  RunResult r;
  r.scenario = apply_overrides(scenario, o);
  const Scenario & s = r.scenario;
  const ModelSpec model = build_model(s);
  const double baseline = compute_baseline_cost(s, seed);
  double budget = s.budget.percent ? s.budget.value / 100.0 * baseline : s.budget.value;
  if (s.model == ModelKind::Racing) {
    RacingMissionConfig cfg = racing_config(s, model, seed);
    cfg.budget = budget;
    r.log = run_racing_mission(model, cfg, s.method, s.x0, s.box0, seed);
    r.summary.mu_planned = cfg.mu_planned;
  } else {
    r.log = run_quad(s, model, s.method == Method::DualGatekeeper, budget, seed);
  }
  MetricsSummary & m = r.summary;
  m.scenario = s.name;
  m.model = to_string(s.model);
  m.method = to_string(s.method);
  m.seed = seed;
  m.total_cost = r.log.total_cost;
  m.baseline_cost = baseline;
  m.cost_pct_of_baseline = 100.0 * r.log.total_cost / baseline;
  m.uncertainty_reduction_pct = reduction_pct(r.log.initial_box, r.log.final_box);
  m.uses_ledger = r.log.uses_ledger;
  m.budget = r.log.uses_ledger ? r.log.budget : 0.0;
  m.spent = r.log.uses_ledger ? r.log.spent : 0.0;
  if (r.log.uses_ledger) {
    m.budget_consumed_pct = r.log.budget > 0.0 ? 100.0 * r.log.spent / r.log.budget : 0.0;
  }
  m.safe_run = r.log.safe && !r.log.aborted;
  m.aborted = r.log.aborted;
  m.diagnostic = r.log.diagnostic;
  m.lap_times = r.log.lap_times;
  m.informative_commits = r.log.informative_commits;
  m.epochs = static_cast<int>(r.log.epochs.size());
  m.smid_sound = r.log.smid_sound;
  m.final_lo = r.log.final_box.lo;
  m.final_hi = r.log.final_box.hi;
  return r;
}

RunResult run_scenario(const std::string & path, uint64_t seed, const Overrides & o)
{
  return run_scenario(load_scenario(path), seed, o);
}

SweepTable sweep(
  const Scenario & s, const std::vector<uint64_t> & seeds, const std::vector<Method> & methods, const Overrides & o,
  const std::string & out_dir)
{
  if (seeds.empty()) {
    throw ScenarioError("seeds: sweep needs at least one seed");
  }
  if (methods.empty()) {
    throw ScenarioError("methods: sweep needs at least one method");
  }
  struct Trial
  {
    Method method;
    uint64_t seed;
  };
  std::vector<Trial> trials;
  for (Method m : methods) {
    for (uint64_t seed : seeds) {
      trials.push_back({m, seed});
    }
  }
  SweepTable table;
  table.rows.resize(trials.size());
  std::vector<std::size_t> idx(trials.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t i) {
    Overrides oi = o;
    oi.method = trials[i].method;
    RunResult r = run_scenario(s, trials[i].seed, oi);
    if (!out_dir.empty()) {
      const std::string dir =
        out_dir + "/" + to_string(trials[i].method) + "/seed_" + std::to_string(trials[i].seed);
      write_run_outputs(dir, r, trials[i].seed, oi);
    }
    table.rows[i].summary = std::move(r.summary);
  });
  for (Method m : methods) {
    SweepAggregate a;
    a.method = to_string(m);
    double lap_sum = 0.0;
    int lap_count = 0;
    double budget_sum = 0.0;
    int budget_count = 0;
    for (const auto & row : table.rows) {
      const MetricsSummary & ms = row.summary;
      if (ms.method != a.method) {
        continue;
      }
      ++a.trials;
      if (ms.safe_run) {
        ++a.safe_runs;
        for (double lt : ms.lap_times) {
          lap_sum += lt;
          ++lap_count;
        }
      }
      if (ms.budget_consumed_pct) {
        budget_sum += *ms.budget_consumed_pct;
        ++budget_count;
      }
      if (a.mean_reduction_pct.empty()) {
        a.mean_reduction_pct.assign(ms.uncertainty_reduction_pct.size(), 0.0);
      }
      for (std::size_t k = 0; k < ms.uncertainty_reduction_pct.size(); ++k) {
        a.mean_reduction_pct[k] += ms.uncertainty_reduction_pct[k];
      }
    }
    a.safe_run_pct = a.trials > 0 ? 100.0 * a.safe_runs / a.trials : 0.0;
    a.mean_lap_time = lap_count > 0 ? lap_sum / lap_count : 0.0;
    a.mean_budget_consumed_pct = budget_count > 0 ? budget_sum / budget_count : 0.0;
    for (double & v : a.mean_reduction_pct) {
      v /= std::max(1, a.trials);
    }
    table.aggregates.push_back(a);
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_table_csv(out_dir + "/table.csv", table);
    write_aggregate_csv(out_dir + "/aggregate.csv", table);
  }
  return table;
}

}  // namespace dualgk
