#include "dualgk/mission.hpp"
#include "dualgk/verify.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace dualgk
{

ParameterBox smid_epoch_update(
  const ModelSpec & model, const Trajectory & executed_segment, double t_from, double t_to, const ParameterBox & box,
  SmidState & state, double window, bool & sound)
{
  std::vector<RegressionTuple> fresh = regression_tuples(model, executed_segment, window, t_from, t_to);
  for (const auto & tup : fresh) {
    try_admit(state.stack, tup);
  }
  std::vector<RegressionTuple> all = state.stack.tuples;
  all.insert(all.end(), fresh.begin(), fresh.end());
  ParameterBox next = smid_refine(box, all, state.eps).box;
  if (!box.contains(next, 1e-12) || !next.contains(model.true_theta, 1e-12)) {
    sound = false;
  }
  return next;
}

std::vector<double> widths_of(const ParameterBox & box)
{
  std::vector<double> w;
  for (int i = 0; i < box.dim(); ++i) {
    w.push_back(box.hi(i) - box.lo(i));
  }
  return w;
}

void append_segment(MissionLog & log, const Trajectory & seg, const std::string & tag)
{
  if (log.executed.empty()) {
    log.executed = seg;
    log.executed.tag = TrajectoryTag::Executed;
    log.step_tags.assign(seg.inputs.size(), tag);
    return;
  }
  log.executed.append(seg);
  log.step_tags.insert(log.step_tags.end(), seg.inputs.size(), tag);
}

MissionLog run_tube_mission(
  const ModelSpec & model, const QuadMissionConfig & cfg, const Vec & x0, const ParameterBox & box0, uint64_t seed)
{
  MissionLog log;
  log.initial_box = box0;
  log.final_box = box0;
  log.true_theta = model.true_theta;
  log.uses_ledger = cfg.uses_ledger;
  log.budget = cfg.budget;
  log.bounds.push_back({0.0, box0.lo, box0.hi});
  BudgetLedger ledger(cfg.budget);
  SmidState smid{cfg.smid.stack, smid_epsilon(model, cfg.smid.window, cfg.smid.quadrature_margin)};
  const QuadTask & task = cfg.task;
  const TubeConstraints cons = quad_constraints(task, model);
  const DirectionSet dirs = DirectionSet::axes(model.param_dim);
  const bool generate = cfg.explore && cfg.budget > 0.0;
  Rng exec_rng(derive_seed(seed, 0xe7ec));

  ParameterBox box = box0;
  Vec x = x0;
  double t = 0.0;
  std::optional<BackupPlan> prev;
  for (int k = 0; t < task.t_final - 1e-9; ++k) {
    BackupPlan plan = plan_backup(model, task, x, t, box, cfg.backup, derive_seed(seed, k, 1), prev ? &*prev : nullptr);
    bool reused = false;
    if (!plan.certified) {
      if (!prev) {
        log.aborted = true;
        log.safe = false;
        log.diagnostic = "backup construction failed at t=0: " + plan.diagnostic;
        spdlog::warn("{}", log.diagnostic);
        break;
      }
      spdlog::info("t={:.2f}: backup replan failed ({}), reusing previous backup", t, plan.diagnostic);
      plan = *prev;
      reused = true;
    }
    const double T_B = task.t_final - t;
    const std::vector<double> horizons = candidate_horizons(T_B, cfg.engine.T_c);
    const Vec theta_hat = box.midpoint();
    std::vector<CandidateRecord> records;
    std::vector<Trajectory> info_trajs(horizons.size());
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      CandidateRecord rec;
      rec.index = static_cast<int>(i) + 1;
      rec.horizon = horizons[i];
      rec.conservative_traj = plan.nominal.slice(t, t + horizons[i]);
      rec.predicted_cost_cons = quad_trajectory_cost(task, rec.conservative_traj);
      records.push_back(rec);
    }
    if (generate && !reused) {
      for (std::size_t i = 0; i < records.size(); ++i) {
        CandidateRecord & rec = records[i];
        const double h = rec.horizon;
        StageCostFn stage = [&task](const Trajectory & tr) { return quad_trajectory_cost(task, tr); };
        InformativeResult inf = plan_informative_segment(
          model, x, t, theta_hat, h, plan.nominal.state_at(t + h), Vec::Ones(model.state_dim), cfg.info, stage,
          plan.blocks, cfg.informative, derive_seed(seed, k, 2, i));
        rec.informative_traj = inf.traj;
        rec.predicted_cost_info = quad_trajectory_cost(task, inf.traj);
        rec.exploration_cost = exploration_cost(rec.predicted_cost_info, rec.predicted_cost_cons);
        if (!inf.recoverable) {
          continue;
        }
        TubeVerdict tv = verify_tube_candidate(
          model, inf.traj, box, cons, plan.ancillary_gains, cfg.backup.tube, derive_seed(seed, k, 3, i));
        rec.valid = tv.valid;
        rec.p_safe = tv.valid ? 1.0 : 0.0;
        if (!rec.valid) {
          continue;
        }
        RolloutPredictorConfig pc;
        pc.n_rollouts = cfg.shrinkage_rollouts;
        pc.window = cfg.smid.window;
        pc.eps = smid.eps;
        pc.dt = model.dt;
        pc.aggregation = cfg.engine.cost_aggregation;
        if (cfg.engine.predictor == PredictorKind::Rollout) {
          rec.delta_xi = predict_rollout(
            model, ancillary_policy(model, inf.traj, plan.ancillary_gains), x, t, h, box, dirs, pc,
            derive_seed(seed, k, 4, i)).delta_xi;
        } else {
          StackedRegressor st = stack_regressor(model, inf.traj, 5);
          rec.delta_xi = predict_consistency(st, model.disturbance_bound, box, dirs).delta_xi;
        }
        info_trajs[i] = inf.traj;
      }
    }
    const double min_gain = cfg.engine.min_relative_gain * avg_width(box, dirs);
    CommitDecision dec = commit(records, ledger, cfg.engine.lambda_discount, t, min_gain);
    const CandidateRecord & chosen = records[static_cast<std::size_t>(dec.index - 1)];
    Trajectory committed_nominal = dec.informative ? chosen.informative_traj : chosen.conservative_traj;
    Policy policy = ancillary_policy(model, dec.informative ? chosen.informative_traj : plan.nominal, plan.ancillary_gains);
    RolloutOptions opts;
    opts.dt = model.dt;
    RolloutResult run = rollout(model, policy, x, t, dec.horizon, model.true_theta, exec_rng, opts);
    std::string tag = dec.informative ? "informative" : (reused ? "backup_reuse" : "conservative");
    append_segment(log, run.traj, tag);
    log.total_cost += quad_trajectory_cost(task, committed_nominal.restricted(dec.horizon));
    log.informative_commits += dec.informative ? 1 : 0;
    for (const Vec & s : run.traj.states) {
      if (!task.map.admissible(s)) {
        log.safe = false;
      }
    }
    if (cfg.smid.enabled) {
      box = smid_epoch_update(model, run.traj, t, t + dec.horizon, box, smid, cfg.smid.window, log.smid_sound);
    }
    EpochRecord er;
    er.t_k = t;
    er.committed = tag;
    er.index = dec.index;
    er.horizon = dec.horizon;
    er.delta_xi = chosen.delta_xi;
    er.score = chosen.score;
    er.exploration_cost = dec.charge;
    er.spent = ledger.spent();
    er.n_candidates = generate ? static_cast<int>(records.size()) : 0;
    er.n_valid = static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto & r) { return r.valid; }));
    er.widths = widths_of(box);
    log.epochs.push_back(er);
    t += dec.horizon;
    x = run.final_state;
    log.bounds.push_back({t, box.lo, box.hi});
    prev = plan;
  }
  log.final_box = box;
  log.spent = ledger.spent();
  log.executed_cost = quad_trajectory_cost(task, log.executed);
  if (!log.aborted && !task.goal.contains(x)) {
    log.safe = false;
    log.diagnostic = "goal region not reached";
  }
  return log;
}

}  // namespace dualgk
