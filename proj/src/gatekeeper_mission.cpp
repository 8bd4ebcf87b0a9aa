#include "dualgk/gatekeeper_mission.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualgk
{

const char * to_string(Method m)
{
  switch (m) {
    case Method::Nominal: return "nominal";
    case Method::Weighted: return "weighted";
    case Method::Fallback: return "fallback";
    case Method::NominalGk: return "nominal_gk";
    case Method::WeightedGk: return "weighted_gk";
    case Method::DualGatekeeper: return "dual_gatekeeper";
  }
  return "unknown";
}

Method parse_method(const std::string & name)
{
  for (Method m : {Method::Nominal, Method::Weighted, Method::Fallback, Method::NominalGk, Method::WeightedGk,
                   Method::DualGatekeeper}) {
    if (name == to_string(m)) {
      return m;
    }
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

bool method_runs_smid(Method m)
{
  return m == Method::Weighted || m == Method::WeightedGk || m == Method::DualGatekeeper;
}

RolloutCost racing_rollout_cost(std::shared_ptr<const Track> track)
{
  return [track](const Trajectory & traj) { return -trajectory_progress(*track, traj); };
}

namespace
{

// Segment policy until t_switch, fallback afterwards.
struct Commitment
{
  Policy segment;
  double t_switch{0.0};
  std::string tag{"fallback"};
};

InputBlocks shift_blocks(const InputBlocks & blocks, double elapsed, double block_dt)
{
  const auto skip = static_cast<std::size_t>(std::max(0.0, std::floor(elapsed / block_dt + 1e-9)));
  if (skip >= blocks.size()) {
    return {};
  }
  return InputBlocks(blocks.begin() + static_cast<std::ptrdiff_t>(skip), blocks.end());
}

}  // namespace

MissionLog run_racing_mission(
  const ModelSpec & model, const RacingMissionConfig & cfg, Method method, const Vec & x0,
  const ParameterBox & box0, uint64_t seed)
{
  if (!cfg.track) {
    throw std::invalid_argument("racing mission needs a track");
  }
  const Track & track = *cfg.track;
  MissionLog log;
  log.method = to_string(method);
  log.initial_box = box0;
  log.final_box = box0;
  log.true_theta = model.true_theta;
  log.uses_ledger = method == Method::DualGatekeeper;
  log.budget = log.uses_ledger ? cfg.budget : 0.0;
  log.bounds.push_back({0.0, box0.lo, box0.hi});
  BudgetLedger ledger(log.budget);
  SmidState smid{cfg.smid.stack, smid_epsilon(model, cfg.smid.window, cfg.smid.quadrature_margin)};
  const bool run_smid = cfg.smid.enabled && method_runs_smid(method);
  const DirectionSet dirs = DirectionSet::axes(model.param_dim);
  const Policy fallback = fallback_policy(cfg.track, cfg.car, cfg.fallback);
  FallbackSpec fb;
  fb.policy = fallback;
  fb.T_fb = cfg.T_fb;
  const auto track_ptr = cfg.track;
  const CarParams car = cfg.car;
  const FallbackConfig fcfg = cfg.fallback;
  fb.fallback_set = [track_ptr, car, fcfg](const Vec & x) { return in_fallback_set(*track_ptr, car, fcfg, x); };
  SafetyConstraints cons;
  cons.state_admissible = [track_ptr, car](const Vec & x) { return car_state_admissible(*track_ptr, car, x); };
  cons.inputs = model.input_bounds;
  const RolloutCost progress_cost = racing_rollout_cost(cfg.track);
  const std::vector<double> horizons = candidate_horizons(cfg.T_B, cfg.engine.T_c);
  Rng exec_rng(derive_seed(seed, 0xe7ec));

  ParameterBox box = box0;
  Vec x = x0;
  double t = 0.0;
  Commitment committed{fallback, 0.0, "fallback"};
  InputBlocks warm_nominal;
  InputBlocks warm_info;
  double last_plan_t = 0.0;
  double progress = 0.0;
  double lap_start = 0.0;
  const double lap_length = track.length();
  double prev_s = track_frame(track, x).s;

  for (int k = 0; static_cast<int>(log.lap_times.size()) < cfg.laps && t < cfg.time_limit - 1e-9; ++k) {
    const double mu_hat = method == Method::Nominal ? cfg.mu_planned : box.project(vec({cfg.mu_planned}))(0);
    if (!warm_nominal.empty()) {
      warm_nominal = shift_blocks(warm_nominal, t - last_plan_t, cfg.planner.block_dt);
      warm_info = shift_blocks(warm_info, t - last_plan_t, cfg.planner.block_dt);
    }
    last_plan_t = t;
    EpochRecord er;
    er.t_k = t;
    double duration = cfg.engine.T_c;
    std::string tag = "fallback";

    auto plan_nominal = [&]() {
      RacingPlan p = plan_nominal_racing(
        model, cfg.track, cfg.car, x, t, mu_hat, cfg.T_B, cfg.planner, derive_seed(seed, k, 1),
        warm_nominal.empty() ? nullptr : &warm_nominal);
      warm_nominal = p.driver.offsets;
      return p;
    };
    auto plan_weighted = [&](double mu_plan) {
      RacingPlan p = plan_informative_racing(
        model, cfg.track, cfg.car, x, t, mu_plan, cfg.T_B, cfg.info, cfg.planner, derive_seed(seed, k, 2),
        warm_info.empty() ? nullptr : &warm_info);
      warm_info = p.driver.offsets;
      return p;
    };
    auto verify = [&](const Policy & pol, double h, uint64_t s) {
      return verify_policy(
        model, pol, h, x, t, box, fb, cons, cfg.n_verify, cfg.delta, s, progress_cost, true);
    };

    switch (method) {
      case Method::Fallback:
        committed = {fallback, t, "fallback"};
        tag = "fallback";
        break;
      case Method::Nominal:
      case Method::Weighted: {
        RacingPlan p = method == Method::Nominal ? plan_nominal() : plan_weighted(mu_hat);
        tag = method == Method::Nominal ? "nominal" : "informative";
        committed = {p.driver.policy(), t + cfg.T_B, tag};
        break;
      }
      case Method::NominalGk:
      case Method::WeightedGk: {
        RacingPlan p = method == Method::NominalGk ? plan_nominal() : plan_weighted(mu_hat);
        const std::string kind = method == Method::NominalGk ? "conservative" : "informative";
        const Policy pol = p.driver.policy();
        er.n_candidates = static_cast<int>(horizons.size());
        bool accepted = false;
        for (std::size_t i = horizons.size(); i-- > 0 && !accepted;) {
          SafetyVerdict v = verify(pol, horizons[i], derive_seed(seed, k, 3, i));
          if (v.accepted) {
            accepted = true;
            committed = {pol, t + horizons[i], kind};
            er.index = static_cast<int>(i) + 1;
            er.horizon = horizons[i];
            er.p_safe = v.p_safe;
            er.n_valid = 1;
          }
        }
        tag = accepted ? kind : "fallback";
        break;
      }
      case Method::DualGatekeeper: {
        RacingPlan nom = plan_nominal();
        const bool generate = ledger.budget() > 0.0;
        RacingPlan inf;
        if (generate) {
          inf = plan_weighted(box.lo(0));
        }
        const Policy nom_pol = nom.driver.policy();
        const Policy inf_pol = generate ? inf.driver.policy() : Policy();
        std::vector<CandidateRecord> records;
        bool nominal_first_ok = false;
        for (std::size_t i = 0; i < horizons.size(); ++i) {
          CandidateRecord rec;
          rec.index = static_cast<int>(i) + 1;
          rec.horizon = horizons[i];
          rec.conservative_traj = nom.traj.slice(t, t + horizons[i]);
          SafetyVerdict vn = verify(nom_pol, horizons[i], derive_seed(seed, k, 3, i));
          if (i == 0) {
            nominal_first_ok = vn.accepted;
          }
          rec.predicted_cost_cons = vn.mean_cost;
          rec.p_safe = vn.p_safe;
          if (generate && vn.accepted) {
            rec.informative_traj = inf.traj.slice(t, t + horizons[i]);
            SafetyVerdict vi = verify(inf_pol, horizons[i], derive_seed(seed, k, 4, i));
            rec.p_safe = vi.p_safe;
            rec.predicted_cost_info = vi.mean_cost;
            if (vi.accepted) {
              rec.valid = true;
              rec.exploration_cost = exploration_cost(vi.mean_cost, vn.mean_cost);
              RolloutPredictorConfig pc;
              pc.n_rollouts = cfg.shrinkage_rollouts;
              pc.window = cfg.smid.window;
              pc.eps = smid.eps;
              pc.dt = model.dt;
              rec.delta_xi =
                predict_rollout(model, inf_pol, x, t, horizons[i], box, dirs, pc, derive_seed(seed, k, 5, i))
                  .delta_xi;
            }
          }
          records.push_back(std::move(rec));
        }
        const double min_gain = cfg.engine.min_relative_gain * avg_width(box, dirs);
        CommitDecision dec = commit(records, ledger, cfg.engine.lambda_discount, t, min_gain);
        const CandidateRecord & chosen = records[static_cast<std::size_t>(dec.index - 1)];
        er.n_candidates = static_cast<int>(records.size());
        er.n_valid = static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto & r) { return r.valid; }));
        er.index = dec.index;
        er.horizon = dec.horizon;
        er.delta_xi = chosen.delta_xi;
        er.score = chosen.score;
        er.exploration_cost = dec.charge;
        er.p_safe = chosen.p_safe;
        if (dec.informative) {
          committed = {inf_pol, t + dec.horizon, "informative"};
          duration = dec.horizon;
          tag = "informative";
          ++log.informative_commits;
        } else if (nominal_first_ok) {
          committed = {nom_pol, t + horizons.front(), "conservative"};
          tag = "conservative";
        } else {
          tag = "fallback";
        }
        break;
      }
    }
    er.committed = tag;

    // Execute the commitment on the true parameter.
    Trajectory seg;
    seg.times.push_back(t);
    seg.states.push_back(x);
    std::vector<std::string> tags;
    const int steps = static_cast<int>(std::llround(duration / model.dt));
    bool done = false;
    for (int j = 0; j < steps && !done; ++j) {
      const bool on_segment = t < committed.t_switch - 1e-9;
      Vec u = model.input_bounds.clamp(on_segment ? committed.segment(t, x) : fallback(t, x));
      Vec w = sample_disturbance(model, exec_rng);
      x = integrate_step(model, x, u, model.true_theta, w, model.dt);
      t = seg.times.front() + (j + 1) * model.dt;
      seg.inputs.push_back(u);
      seg.times.push_back(t);
      seg.states.push_back(x);
      tags.push_back(on_segment ? committed.tag : "fallback");
      if (!car_state_admissible(track, cfg.car, x)) {
        log.safe = false;
        log.diagnostic = "state constraint violated at t=" + std::to_string(t);
        done = true;
      }
      const double s = track_frame(track, x).s;
      const double ds = track.progress_delta(prev_s, s);
      prev_s = s;
      const double before = progress;
      progress += ds;
      const double next_mark = (static_cast<double>(log.lap_times.size()) + 1.0) * lap_length;
      if (before < next_mark && progress >= next_mark) {
        const double frac = ds > 0.0 ? (next_mark - before) / ds : 1.0;
        const double t_cross = t - model.dt + frac * model.dt;
        log.lap_times.push_back(t_cross - lap_start);
        lap_start = t_cross;
        if (static_cast<int>(log.lap_times.size()) >= cfg.laps) {
          done = true;
        }
      }
    }
    const double t_from = seg.times.front();
    if (log.executed.empty()) {
      log.executed = seg;
      log.executed.tag = TrajectoryTag::Executed;
      log.step_tags = tags;
    } else {
      log.executed.append(seg);
      log.step_tags.insert(log.step_tags.end(), tags.begin(), tags.end());
    }
    if (run_smid && seg.size() > 1) {
      box = smid_epoch_update(model, seg, t_from, t, box, smid, cfg.smid.window, log.smid_sound);
    }
    er.spent = ledger.spent();
    er.widths = widths_of(box);
    log.epochs.push_back(er);
    log.bounds.push_back({t, box.lo, box.hi});
    spdlog::debug(
      "racing {} k={} t={:.2f} tag={} mu_hat={:.3f} box=[{:.3f},{:.3f}] laps={}", log.method, k, t_from, tag, mu_hat,
      box.lo(0), box.hi(0), log.lap_times.size());
    if (!log.safe) {
      break;
    }
  }
  log.final_box = box;
  log.spent = ledger.spent();
  const bool completed = static_cast<int>(log.lap_times.size()) >= cfg.laps;
  if (log.safe && !completed) {
    log.safe = false;
    log.diagnostic = "lap count not reached within the time limit";
  }
  log.total_cost = log.executed.empty() ? 0.0 : log.executed.end_time() - log.executed.start_time();
  log.executed_cost = log.total_cost;
  return log;
}

}  // namespace dualgk
