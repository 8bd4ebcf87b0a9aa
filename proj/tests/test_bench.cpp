#include "dualgk/bench.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dualgk;
using nlohmann::json;

namespace
{

std::string scenario_path(const std::string & name)
{
  return std::string(DUALGK_SOURCE_DIR) + "/scenarios/" + name;
}

json read_json(const std::string & path)
{
  std::ifstream in(path);
  return json::parse(in);
}

// Small stadium track run with the fallback only; cheap enough for unit tests.
json small_racing()
{
  json wps = json::array();
  for (int i = 0; i < 10; ++i) wps.push_back({-5.0 + i, -4.0});
  for (int i = 0; i < 12; ++i) {
    const double a = -M_PI / 2 + M_PI * i / 12;
    wps.push_back({5.0 + 4.0 * std::cos(a), 4.0 * std::sin(a)});
  }
  for (int i = 0; i < 10; ++i) wps.push_back({5.0 - i, 4.0});
  for (int i = 0; i < 12; ++i) {
    const double a = M_PI / 2 + M_PI * i / 12;
    wps.push_back({-5.0 + 4.0 * std::cos(a), 4.0 * std::sin(a)});
  }
  return {
    {"name", "small"},
    {"model", "racing"},
    {"method", "fallback"},
    {"initial_state", {-3.0, -4.0, 0.0, 2.2, 0.0, 0.0, 0.0}},
    {"true_theta", {0.9}},
    {"initial_box", {{"lo", {0.2}}, {"hi", {2.0}}}},
    {"smid", {{"quadrature_margin", 0.02}}},
    {"racing", {{"track", {{"waypoints", wps}, {"half_width", 1.5}}}, {"laps", 1}}}};
}

std::string error_of(const json & j)
{
  try {
    parse_scenario(j);
  } catch (const ScenarioError & e) {
    return e.what();
  }
  return "";
}

std::string first_line(const std::string & path)
{
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST(Bench, ShippedScenariosParse)
{
  for (const char * name : {"quad_case1.json", "quad_case2.json", "racing.json"}) {
    EXPECT_NO_THROW(load_scenario(scenario_path(name))) << name;
  }
  Scenario r = load_scenario(scenario_path("racing.json"));
  EXPECT_EQ(r.model, ModelKind::Racing);
  EXPECT_EQ(r.racing.n_verify, 200);
  EXPECT_DOUBLE_EQ(r.racing.delta, 0.05);
  EXPECT_DOUBLE_EQ(r.true_theta(0), 0.9);
  EXPECT_EQ(r.racing.mu_planned_grid.size(), 10u);
}

TEST(Bench, ErrorsCarryFieldPath)
{
  json j = small_racing();
  j["racing"]["car"] = {{"mass", 3.0}};
  EXPECT_EQ(error_of(j).rfind("racing.car.mass: unknown field", 0), 0u) << error_of(j);

  j = small_racing();
  j["racing"]["car"] = {{"m", -1.0}};
  EXPECT_EQ(error_of(j).rfind("racing.car.m: must be positive", 0), 0u) << error_of(j);

  j = small_racing();
  j["racing"]["track"]["waypoints"][3] = {1.0};
  EXPECT_EQ(error_of(j).rfind("racing.track.waypoints[3]", 0), 0u) << error_of(j);

  j = small_racing();
  j.erase("model");
  EXPECT_EQ(error_of(j).rfind("model: missing required field", 0), 0u) << error_of(j);

  j = small_racing();
  j["true_theta"] = {2.5};
  EXPECT_EQ(error_of(j).rfind("true_theta:", 0), 0u) << error_of(j);

  j = small_racing();
  j["method"] = "greedy";
  EXPECT_EQ(error_of(j).rfind("method:", 0), 0u) << error_of(j);

  j = small_racing();
  j["racing"]["delta"] = 1.5;
  EXPECT_EQ(error_of(j).rfind("racing.delta: must lie in (0, 1)", 0), 0u) << error_of(j);
}

TEST(Bench, QuadScenariosRestrictMethods)
{
  json j = read_json(scenario_path("quad_case1.json"));
  j["method"] = "weighted";
  EXPECT_EQ(error_of(j).rfind("method:", 0), 0u);
  j["method"] = "nominal_gk";
  EXPECT_EQ(error_of(j), "");
  Scenario s = parse_scenario(j);
  Overrides o;
  o.method = Method::Fallback;
  EXPECT_THROW(apply_overrides(s, o), ScenarioError);
}

TEST(Bench, RacingDefaults)
{
  Scenario s = parse_scenario(small_racing());
  EXPECT_FALSE(s.budget.percent);
  EXPECT_DOUBLE_EQ(s.budget.value, 100.0);
  EXPECT_DOUBLE_EQ(s.engine.min_relative_gain, 0.1);
  EXPECT_DOUBLE_EQ(s.engine.T_c, 2.0);
  Overrides o;
  o.budget_pct = 50.0;
  try {
    apply_overrides(s, o);
    ADD_FAILURE() << "percent budget accepted for racing";
  } catch (const ScenarioError & e) {
    EXPECT_EQ(std::string(e.what()).rfind("budget.mode:", 0), 0u);
  }
}

TEST(Bench, MuPlannedGridIndexedBySeed)
{
  Scenario s = parse_scenario(small_racing());
  EXPECT_DOUBLE_EQ(racing_mu_planned(s, 0), 0.28);
  EXPECT_DOUBLE_EQ(racing_mu_planned(s, 4), 0.90);
  EXPECT_DOUBLE_EQ(racing_mu_planned(s, 19), 1.95);
  s.racing.mu_planned = 1.3;
  EXPECT_DOUBLE_EQ(racing_mu_planned(s, 4), 1.3);
}

TEST(Bench, MaterializedScenarioRoundTrips)
{
  for (const char * name : {"quad_case1.json", "racing.json"}) {
    Scenario s = load_scenario(scenario_path(name));
    json a = scenario_to_json(s);
    json b = scenario_to_json(parse_scenario(a));
    EXPECT_EQ(a, b) << name;
  }
}

TEST(Bench, FormatDoubleNineDigits)
{
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_double(123456789012.0), "1.23456789e+11");
}

TEST(Bench, FallbackRunIsItsOwnBaseline)
{
  Scenario s = parse_scenario(small_racing());
  RunResult a = run_scenario(s, 3);
  EXPECT_TRUE(a.summary.safe_run);
  EXPECT_EQ(a.summary.lap_times.size(), 1u);
  EXPECT_DOUBLE_EQ(a.summary.cost_pct_of_baseline, 100.0);
  EXPECT_DOUBLE_EQ(a.summary.cost_pct_of_baseline, 100.0 * a.summary.total_cost / a.summary.baseline_cost);
  EXPECT_FALSE(a.summary.budget_consumed_pct.has_value());
  ASSERT_EQ(a.summary.uncertainty_reduction_pct.size(), 1u);
  EXPECT_EQ(a.summary.uncertainty_reduction_pct[0], 0.0);
  RunResult b = run_scenario(s, 3);
  EXPECT_EQ(summary_to_json(a.summary).dump(), summary_to_json(b.summary).dump());
}

TEST(Bench, ReductionPercent)
{
  auto r = reduction_pct(ParameterBox(vec({0.0, 0.0}), vec({2.0, 1.0})), ParameterBox(vec({0.5, 0.0}), vec({1.0, 1.0})));
  EXPECT_DOUBLE_EQ(r[0], 75.0);
  EXPECT_DOUBLE_EQ(r[1], 0.0);
}

TEST(Bench, OutputFilesHaveDocumentedColumns)
{
  Scenario s = parse_scenario(small_racing());
  const std::string dir = (std::filesystem::temp_directory_path() / "dualgk_bench_outputs").string();
  std::filesystem::remove_all(dir);
  SweepTable t = sweep(s, {1, 2}, {Method::Fallback}, {}, dir);
  ASSERT_EQ(t.rows.size(), 2u);
  ASSERT_EQ(t.aggregates.size(), 1u);
  EXPECT_EQ(t.aggregates[0].safe_runs, 2);
  EXPECT_DOUBLE_EQ(t.aggregates[0].safe_run_pct, 100.0);

  const std::string run = dir + "/fallback/seed_1";
  EXPECT_EQ(
    first_line(run + "/epochs.csv"),
    "t_k,committed,index,horizon,delta_xi,score,exploration_cost,spent,n_candidates,n_valid,p_safe,width_0");
  EXPECT_EQ(first_line(run + "/trajectory.csv"), "t,tag,lap,x_0,x_1,x_2,x_3,x_4,x_5,x_6,u_0,u_1,u_2");
  EXPECT_EQ(first_line(run + "/bounds.csv"), "t,lo_0,hi_0,width_0");
  json summary = read_json(run + "/summary.json");
  for (const char * key : {"total_cost", "cost_pct_of_baseline", "uncertainty_reduction_pct", "safe_run", "lap_times",
                           "first_lap_time", "last_lap_time"}) {
    EXPECT_TRUE(summary.contains(key)) << key;
  }
  EXPECT_EQ(summary["lap_times"].size(), 1u);
  json config = read_json(run + "/config.json");
  EXPECT_EQ(config["seed"], 1);
  EXPECT_EQ(config["scenario"]["model"], "racing");
  EXPECT_EQ(first_line(dir + "/table.csv").rfind("method,seed,mu_planned,success,lap_count,first_lap_time,last_lap_time", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir + "/aggregate.csv"));

  // Lap count in the trajectory matches the summary.
  std::ifstream in(run + "/trajectory.csv");
  std::string line;
  std::getline(in, line);
  int max_lap = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string t, tag, lap;
    std::getline(ss, t, ',');
    std::getline(ss, tag, ',');
    std::getline(ss, lap, ',');
    max_lap = std::max(max_lap, std::stoi(lap));
  }
  EXPECT_EQ(max_lap, static_cast<int>(summary["lap_times"].size()));
}
