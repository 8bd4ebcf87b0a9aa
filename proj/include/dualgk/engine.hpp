#pragma once

#include "dualgk/models.hpp"
#include "dualgk/shrinkage.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace dualgk
{

struct CandidateRecord
{
  int index{1};
  double horizon{0.0};
  Trajectory informative_traj;
  Trajectory conservative_traj;
  bool valid{false};
  double p_safe{0.0};
  double predicted_cost_info{0.0};
  double predicted_cost_cons{0.0};
  double delta_xi{0.0};
  double score{0.0};
  double exploration_cost{0.0};
  bool budget_feasible{false};
};

class BudgetLedger
{
public:
  explicit BudgetLedger(double budget = 0.0);

  double budget() const { return budget_; }
  double spent() const { return spent_; }
  const std::vector<std::pair<double, double>> & per_epoch() const { return per_epoch_; }
  void charge(double t_k, double amount);

private:
  double budget_;
  double spent_{0.0};
  std::vector<std::pair<double, double>> per_epoch_;
};

enum class TieBreak { SmallestIndex };

struct EngineConfig
{
  double T_c{2.0};
  double lambda_discount{0.1};
  int n_shrinkage_rollouts{20};
  TieBreak tie_break{TieBreak::SmallestIndex};
  PredictorKind predictor{PredictorKind::Rollout};
  Aggregation cost_aggregation{Aggregation::Mean};
  // Informative candidates need delta_xi above this fraction of the current average width.
  double min_relative_gain{0.0};
};

std::vector<double> candidate_horizons(double T_B, double T_c);

double score_candidate(const CandidateRecord & rec, double lambda);

double exploration_cost(double cost_info, double cost_cons);

// Valid candidates whose charge fits the remaining budget; those with delta_xi <= min_gain are dropped.
std::vector<int> feasible_set(
  const std::vector<CandidateRecord> & records, const BudgetLedger & ledger,
  double min_gain = -std::numeric_limits<double>::infinity());

struct CommitDecision
{
  bool informative{false};
  int index{1};
  double horizon{0.0};
  double charge{0.0};
  double next_replan_dt{0.0};
};

// Scores, filters and commits; charges the ledger for informative commits.
CommitDecision commit(
  std::vector<CandidateRecord> & records, BudgetLedger & ledger, double lambda, double t_k,
  double min_gain = -std::numeric_limits<double>::infinity());

}  // namespace dualgk
