#pragma once

#include "dualgk/mission.hpp"
#include "dualgk/racing_planner.hpp"
#include "dualgk/verify.hpp"

#include <memory>
#include <string>

namespace dualgk
{

enum class Method { Nominal, Weighted, Fallback, NominalGk, WeightedGk, DualGatekeeper };

const char * to_string(Method m);
// Throws std::invalid_argument for unknown names.
Method parse_method(const std::string & name);

struct RacingMissionConfig
{
  std::shared_ptr<const Track> track;
  CarParams car;
  FallbackConfig fallback;
  RacingPlannerConfig planner;
  InfoObjective info{30.0, Mat(), 1e-6};
  EngineConfig engine;
  double T_B{6.0};
  double T_fb{4.0};
  int n_verify{200};
  double delta{0.05};
  int laps{10};
  double time_limit{400.0};
  SmidSettings smid;
  double mu_planned{0.9};
  double budget{100.0};  // progress metres
  int shrinkage_rollouts{20};
};

// Methods that refine the parameter box online.
bool method_runs_smid(Method m);

// Verification rollout cost: negative track progress in metres.
RolloutCost racing_rollout_cost(std::shared_ptr<const Track> track);

// Gatekeeper-style racing mission with fixed T_B; stops at the lap count, a violation, or the time limit.
MissionLog run_racing_mission(
  const ModelSpec & model, const RacingMissionConfig & cfg, Method method, const Vec & x0,
  const ParameterBox & box0, uint64_t seed);

}  // namespace dualgk
