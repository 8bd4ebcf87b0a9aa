#pragma once

#include "dualgk/gatekeeper_mission.hpp"
#include "dualgk/mission.hpp"
#include "dualgk/quadrotor.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualgk
{

enum class ModelKind { DragQuad, VectorDragQuad, Racing };

const char * to_string(ModelKind k);

// Parse or validation failure; the message starts with the offending field path.
class ScenarioError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct BudgetSpec
{
  bool percent{true};  // percent of the baseline cost, otherwise absolute
  double value{110.0};
};

struct SmidScenario
{
  double window{0.2};
  std::optional<double> quadrature_margin;  // estimated from the model when absent
  std::size_t stack_capacity{50};
  double admission_threshold{1e-4};
  std::size_t min_fill{1};
};

struct QuadScenario
{
  QuadParams params;
  QuadTask task;
  BackupConfig backup;
  InformativeConfig informative;
  InfoObjective info;
};

struct RacingScenario
{
  std::vector<Eigen::Vector2d> waypoints;
  double half_width{1.5};
  CarParams car;
  FallbackConfig fallback;
  RacingPlannerConfig planner;
  InfoObjective info{30.0, Mat(), 1e-6};
  double T_B{6.0};
  double T_fb{4.0};
  int n_verify{200};
  double delta{0.05};
  int laps{10};
  double time_limit{400.0};
  std::vector<double> mu_planned_grid{0.28, 0.47, 0.64, 0.81, 0.90, 1.12, 1.36, 1.58, 1.73, 1.95};
  std::optional<double> mu_planned;  // overrides the grid
};

struct Scenario
{
  std::string name;
  ModelKind model{ModelKind::DragQuad};
  Method method{Method::DualGatekeeper};
  Vec x0;
  Vec true_theta;
  ParameterBox box0;
  std::vector<uint64_t> seeds;
  BudgetSpec budget;
  EngineConfig engine;
  SmidScenario smid;
  QuadScenario quad;
  RacingScenario racing;
};

Scenario parse_scenario(const nlohmann::json & j);
Scenario load_scenario(const std::string & path);
// Every field with its resolved value.
nlohmann::json scenario_to_json(const Scenario & s);

// Planned friction for a racing trial: explicit value, else grid[seed mod size].
double racing_mu_planned(const Scenario & s, uint64_t seed);

ModelSpec build_model(const Scenario & s);

struct Overrides
{
  std::optional<Method> method;
  std::optional<double> budget_pct;
  std::optional<int> rollouts;
};

Scenario apply_overrides(Scenario s, const Overrides & o);

struct MetricsSummary
{
  std::string scenario;
  std::string model;
  std::string method;
  uint64_t seed{0};
  double total_cost{0.0};
  double baseline_cost{0.0};
  double cost_pct_of_baseline{0.0};
  std::vector<double> uncertainty_reduction_pct;
  bool uses_ledger{false};
  double budget{0.0};
  double spent{0.0};
  std::optional<double> budget_consumed_pct;
  bool safe_run{false};
  bool aborted{false};
  std::string diagnostic;
  std::vector<double> lap_times;
  std::optional<double> mu_planned;
  int informative_commits{0};
  int epochs{0};
  bool smid_sound{true};
  Vec final_lo;
  Vec final_hi;
};

struct RunResult
{
  Scenario scenario;
  MissionLog log;
  MetricsSummary summary;
};

// Backup-only robust run (quadrotor) or fallback-only run (racing); throws when the cost is not positive.
double compute_baseline_cost(const Scenario & s, uint64_t seed);

RunResult run_scenario(const Scenario & s, uint64_t seed, const Overrides & o = {});
RunResult run_scenario(const std::string & path, uint64_t seed, const Overrides & o = {});

// Percentage width reduction per coordinate, clamped to [0, 100].
std::vector<double> reduction_pct(const ParameterBox & before, const ParameterBox & after);

struct SweepRow
{
  MetricsSummary summary;
};

struct SweepAggregate
{
  std::string method;
  int trials{0};
  int safe_runs{0};
  double safe_run_pct{0.0};
  double mean_lap_time{0.0};  // over laps of safe runs, racing only
  double mean_budget_consumed_pct{0.0};
  std::vector<double> mean_reduction_pct;
};

struct SweepTable
{
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
};

// Runs every (method, seed) trial; writes per-trial outputs under out_dir/<method>/seed_<n> when out_dir is set.
SweepTable sweep(
  const Scenario & s, const std::vector<uint64_t> & seeds, const std::vector<Method> & methods,
  const Overrides & o = {}, const std::string & out_dir = "");

// Output files. Floats use 9 significant digits.
std::string format_double(double v);
nlohmann::json summary_to_json(const MetricsSummary & m);
void write_epochs_csv(const std::string & path, const MissionLog & log);
void write_trajectory_csv(const std::string & path, const MissionLog & log, const Scenario & s);
void write_bounds_csv(const std::string & path, const MissionLog & log);
void write_summary_json(const std::string & path, const MetricsSummary & m);
void write_run_outputs(const std::string & dir, const RunResult & r, uint64_t seed, const Overrides & o);
void write_table_csv(const std::string & path, const SweepTable & table);
void write_aggregate_csv(const std::string & path, const SweepTable & table);

}  // namespace dualgk
