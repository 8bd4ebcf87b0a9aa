#pragma once

#include "dualgk/engine.hpp"
#include "dualgk/planners.hpp"
#include "dualgk/shrinkage.hpp"
#include "dualgk/smid.hpp"

#include <string>
#include <vector>

namespace dualgk
{

struct EpochRecord
{
  double t_k{0.0};
  std::string committed;  // informative | conservative | fallback | backup_reuse
  int index{0};
  double horizon{0.0};
  double delta_xi{0.0};
  double score{0.0};
  double exploration_cost{0.0};
  double spent{0.0};
  int n_candidates{0};
  int n_valid{0};
  double p_safe{1.0};
  std::vector<double> widths;  // after the epoch's SMID update
};

struct BoundsRecord
{
  double t{0.0};
  Vec lo;
  Vec hi;
};

struct MissionLog
{
  std::string method;
  std::vector<EpochRecord> epochs;
  Trajectory executed;
  std::vector<std::string> step_tags;  // committed segment kind per executed step
  std::vector<BoundsRecord> bounds;
  ParameterBox initial_box;
  ParameterBox final_box;
  Vec true_theta;
  double total_cost{0.0};
  double executed_cost{0.0};
  bool uses_ledger{false};
  double budget{0.0};
  double spent{0.0};
  bool safe{true};
  bool aborted{false};
  std::string diagnostic;
  std::vector<double> lap_times;
  int informative_commits{0};
  bool smid_sound{true};  // true parameter kept and boxes nested at every update
};

struct SmidSettings
{
  bool enabled{true};
  double window{0.2};
  double quadrature_margin{0.0};
  HistoryStack stack;
};

struct QuadMissionConfig
{
  QuadTask task;
  BackupConfig backup;
  InformativeConfig informative;
  InfoObjective info;
  EngineConfig engine;
  int shrinkage_rollouts{20};
  SmidSettings smid;
  bool explore{true};
  double budget{0.0};
  bool uses_ledger{true};
};

std::vector<double> widths_of(const ParameterBox & box);

// Appends an executed segment and tags each of its steps.
void append_segment(MissionLog & log, const Trajectory & seg, const std::string & tag);

// Tube-style receding-horizon mission (adaptive T_B = t_final - t_k).
MissionLog run_tube_mission(
  const ModelSpec & model, const QuadMissionConfig & cfg, const Vec & x0, const ParameterBox & box0, uint64_t seed);

// Shared SMID step: admits fresh tuples, refines with stack plus fresh data, checks soundness.
struct SmidState
{
  HistoryStack stack;
  double eps{0.0};
};

ParameterBox smid_epoch_update(
  const ModelSpec & model, const Trajectory & executed_segment, double t_from, double t_to, const ParameterBox & box,
  SmidState & state, double window, bool & sound);

}  // namespace dualgk
