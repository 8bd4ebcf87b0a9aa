#include "dualgk/bench.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>
#include <sstream>

namespace
{

std::vector<std::string> split_list(const std::string & s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

// Accepts "1,2,5" and ranges "0-9".
std::vector<uint64_t> parse_seeds(const std::string & s)
{
  std::vector<uint64_t> out;
  for (const auto & item : split_list(s)) {
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const uint64_t a = std::stoull(item.substr(0, dash));
      const uint64_t b = std::stoull(item.substr(dash + 1));
      if (b < a) {
        throw dualgk::ScenarioError("seeds: range '" + item + "' is decreasing");
      }
      for (uint64_t v = a; v <= b; ++v) {
        out.push_back(v);
      }
    } else {
      out.push_back(std::stoull(item));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Budget-constrained dual-control simulation and benchmark"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

  std::string scenario_path;
  std::string out_dir;
  std::string method;
  uint64_t seed = 1;
  double budget_pct = -1.0;
  int rollouts = -1;
  auto * run = app.add_subcommand("run", "Run one scenario with one seed");
  run->add_option("--scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Seed");
  run->add_option("--method", method, "nominal, weighted, fallback, nominal_gk, weighted_gk, dual_gatekeeper");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--budget-pct", budget_pct, "Exploration budget as percent of the baseline cost");
  run->add_option("--rollouts", rollouts, "Shrinkage-prediction rollouts");

  std::string seeds_arg;
  std::string methods_arg;
  auto * sw = app.add_subcommand("sweep", "Run scenario x seeds x methods");
  sw->add_option("--scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--seeds", seeds_arg, "Comma list or ranges, e.g. 0-9")->required();
  sw->add_option("--methods", methods_arg, "Comma list of methods")->required();
  sw->add_option("--out", out_dir, "Output directory")->required();
  sw->add_option("--budget-pct", budget_pct, "Exploration budget as percent of the baseline cost");
  sw->add_option("--rollouts", rollouts, "Shrinkage-prediction rollouts");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    dualgk::Overrides o;
    if (budget_pct >= 0.0) {
      o.budget_pct = budget_pct;
    }
    if (rollouts > 0) {
      o.rollouts = rollouts;
    }
    const dualgk::Scenario scenario = dualgk::load_scenario(scenario_path);
    if (*run) {
      if (!method.empty()) {
        o.method = dualgk::parse_method(method);
      }
      dualgk::RunResult r = dualgk::run_scenario(scenario, seed, o);
      dualgk::write_run_outputs(out_dir, r, seed, o);
      std::cout << dualgk::summary_to_json(r.summary).dump(2) << "\n";
      return r.summary.aborted ? 2 : 0;
    }
    std::vector<dualgk::Method> methods;
    for (const auto & m : split_list(methods_arg)) {
      methods.push_back(dualgk::parse_method(m));
    }
    dualgk::SweepTable t = dualgk::sweep(scenario, parse_seeds(seeds_arg), methods, o, out_dir);
    for (const auto & a : t.aggregates) {
      std::cout << a.method << ": " << a.safe_runs << "/" << a.trials << " safe, mean lap "
                << dualgk::format_double(a.mean_lap_time) << " s, budget consumed "
                << dualgk::format_double(a.mean_budget_consumed_pct) << "%\n";
    }
    return 0;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
