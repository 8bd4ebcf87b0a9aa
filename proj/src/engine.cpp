#include "dualgk/engine.hpp"

#include <algorithm>
#include <cmath>

namespace dualgk
{

BudgetLedger::BudgetLedger(double budget) : budget_(budget)
{
  require(budget >= 0.0, "BudgetLedger: budget must be non-negative");
}

void BudgetLedger::charge(double t_k, double amount)
{
  require(amount >= 0.0, "BudgetLedger: negative charge");
  if (spent_ + amount > budget_) {
    throw ContractViolation("BudgetLedger: charge would exceed the exploration budget");
  }
  spent_ += amount;
  per_epoch_.emplace_back(t_k, amount);
}

std::vector<double> candidate_horizons(double T_B, double T_c)
{
  require(T_B > 0.0 && T_c > 0.0, "candidate_horizons: horizons must be positive");
  std::vector<double> out;
  // Round-off guard so T_B an exact multiple of T_c does not spawn an extra index.
  const int count = static_cast<int>(std::ceil(T_B / T_c - 1e-9));
  for (int i = 1; i <= count; ++i) {
    double h = std::min(i * T_c, T_B);
    if (out.empty() || h > out.back() + 1e-12) {
      out.push_back(h);
    }
  }
  return out;
}

double score_candidate(const CandidateRecord & rec, double lambda)
{
  require(rec.delta_xi >= 0.0, "score_candidate: delta_xi must be non-negative");
  return std::exp(-lambda * rec.horizon) * rec.delta_xi;
}

double exploration_cost(double cost_info, double cost_cons)
{
  require(std::isfinite(cost_info) && std::isfinite(cost_cons), "exploration_cost: costs must be finite");
  return std::max(0.0, cost_info - cost_cons);
}

std::vector<int> feasible_set(const std::vector<CandidateRecord> & records, const BudgetLedger & ledger, double min_gain)
{
  std::vector<int> out;
  for (const auto & r : records) {
    if (r.valid && ledger.spent() + r.exploration_cost <= ledger.budget() && r.delta_xi > min_gain) {
      out.push_back(r.index);
    }
  }
  return out;
}

CommitDecision commit(
  std::vector<CandidateRecord> & records, BudgetLedger & ledger, double lambda, double t_k, double min_gain)
{
  require(!records.empty(), "commit: the i=1 conservative segment must exist");
  for (auto & r : records) {
    r.score = score_candidate(r, lambda);
    r.budget_feasible = false;
  }
  std::vector<int> feasible = feasible_set(records, ledger, min_gain);
  CommitDecision d;
  if (feasible.empty()) {
    const CandidateRecord & first = *std::min_element(
      records.begin(), records.end(), [](const auto & a, const auto & b) { return a.index < b.index; });
    d.informative = false;
    d.index = first.index;
    d.horizon = first.horizon;
    d.charge = 0.0;
    d.next_replan_dt = first.horizon;
    return d;
  }
  const CandidateRecord * best = nullptr;
  for (auto & r : records) {
    if (std::find(feasible.begin(), feasible.end(), r.index) == feasible.end()) {
      continue;
    }
    r.budget_feasible = true;
    if (!best || r.score > best->score || (r.score == best->score && r.index < best->index)) {
      best = &r;
    }
  }
  d.informative = true;
  d.index = best->index;
  d.horizon = best->horizon;
  d.charge = best->exploration_cost;
  d.next_replan_dt = best->horizon;
  ledger.charge(t_k, d.charge);
  return d;
}

}  // namespace dualgk
