#include "dualgk/bench.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace dualgk
{

using nlohmann::json;

std::string format_double(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace
{

// Rounds to 9 significant digits so the JSON dump carries no more.
json num(double v)
{
  if (!std::isfinite(v)) {
    return nullptr;
  }
  return std::stod(format_double(v));
}

json nums(const std::vector<double> & v)
{
  json out = json::array();
  for (double x : v) {
    out.push_back(num(x));
  }
  return out;
}

json nums(const Vec & v)
{
  return nums(std::vector<double>(v.data(), v.data() + v.size()));
}

std::ofstream open_out(const std::string & path)
{
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  return out;
}

// Recursively rounds every floating value.
json rounded(const json & j)
{
  if (j.is_number_float()) {
    return num(j.get<double>());
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto & v : j) {
      out.push_back(rounded(v));
    }
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      out[it.key()] = rounded(it.value());
    }
    return out;
  }
  return j;
}

}  // namespace

json summary_to_json(const MetricsSummary & m)
{
  json j;
  j["scenario"] = m.scenario;
  j["model"] = m.model;
  j["method"] = m.method;
  j["seed"] = m.seed;
  j["total_cost"] = num(m.total_cost);
  j["baseline_cost"] = num(m.baseline_cost);
  j["cost_pct_of_baseline"] = num(m.cost_pct_of_baseline);
  j["uncertainty_reduction_pct"] = nums(m.uncertainty_reduction_pct);
  j["final_box"] = {{"lo", nums(m.final_lo)}, {"hi", nums(m.final_hi)}};
  j["uses_ledger"] = m.uses_ledger;
  j["budget"] = m.uses_ledger ? num(m.budget) : json(nullptr);
  j["spent"] = m.uses_ledger ? num(m.spent) : json(nullptr);
  j["budget_consumed_pct"] = m.budget_consumed_pct ? num(*m.budget_consumed_pct) : json(nullptr);
  j["safe_run"] = m.safe_run;
  j["aborted"] = m.aborted;
  j["diagnostic"] = m.diagnostic;
  j["lap_count"] = m.lap_times.size();
  j["lap_times"] = nums(m.lap_times);
  j["first_lap_time"] = m.lap_times.empty() ? json(nullptr) : num(m.lap_times.front());
  j["last_lap_time"] = m.lap_times.empty() ? json(nullptr) : num(m.lap_times.back());
  j["mu_planned"] = m.mu_planned ? num(*m.mu_planned) : json(nullptr);
  j["informative_commits"] = m.informative_commits;
  j["epochs"] = m.epochs;
  j["smid_sound"] = m.smid_sound;
  return j;
}

void write_epochs_csv(const std::string & path, const MissionLog & log)
{
  std::ofstream out = open_out(path);
  out << "t_k,committed,index,horizon,delta_xi,score,exploration_cost,spent,n_candidates,n_valid,p_safe";
  const int p = log.initial_box.dim();
  for (int i = 0; i < p; ++i) {
    out << ",width_" << i;
  }
  out << "\n";
  for (const auto & e : log.epochs) {
    out << format_double(e.t_k) << "," << e.committed << "," << e.index << "," << format_double(e.horizon) << ","
        << format_double(e.delta_xi) << "," << format_double(e.score) << "," << format_double(e.exploration_cost)
        << "," << format_double(e.spent) << "," << e.n_candidates << "," << e.n_valid << ","
        << format_double(e.p_safe);
    for (int i = 0; i < p; ++i) {
      out << "," << (i < static_cast<int>(e.widths.size()) ? format_double(e.widths[static_cast<std::size_t>(i)]) : "");
    }
    out << "\n";
  }
}

void write_trajectory_csv(const std::string & path, const MissionLog & log, const Scenario & s)
{
  std::ofstream out = open_out(path);
  const Trajectory & tr = log.executed;
  const int n = tr.empty() ? static_cast<int>(s.x0.size()) : static_cast<int>(tr.states.front().size());
  const int m = tr.inputs.empty() ? 0 : static_cast<int>(tr.inputs.front().size());
  out << "t,tag,lap";
  for (int i = 0; i < n; ++i) {
    out << ",x_" << i;
  }
  for (int i = 0; i < m; ++i) {
    out << ",u_" << i;
  }
  out << "\n";
  std::unique_ptr<Track> track;
  if (s.model == ModelKind::Racing) {
    track = std::make_unique<Track>(s.racing.waypoints, s.racing.half_width);
  }
  double progress = 0.0;
  double prev_s = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    int lap = 0;
    if (track) {
      const double sk = track_frame(*track, tr.states[k]).s;
      if (k > 0) {
        progress += track->progress_delta(prev_s, sk);
      }
      prev_s = sk;
      lap = static_cast<int>(std::floor(progress / track->length() + 1e-12));
    }
    const std::string tag =
      log.step_tags.empty() ? "" : log.step_tags[std::min(k, log.step_tags.size() - 1)];
    out << format_double(tr.times[k]) << "," << tag << "," << lap;
    for (int i = 0; i < n; ++i) {
      out << "," << format_double(tr.states[k](i));
    }
    for (int i = 0; i < m; ++i) {
      out << ",";
      if (k < tr.inputs.size()) {
        out << format_double(tr.inputs[k](i));
      }
    }
    out << "\n";
  }
}

void write_bounds_csv(const std::string & path, const MissionLog & log)
{
  std::ofstream out = open_out(path);
  const int p = log.initial_box.dim();
  out << "t";
  for (int i = 0; i < p; ++i) {
    out << ",lo_" << i;
  }
  for (int i = 0; i < p; ++i) {
    out << ",hi_" << i;
  }
  for (int i = 0; i < p; ++i) {
    out << ",width_" << i;
  }
  out << "\n";
  for (const auto & b : log.bounds) {
    out << format_double(b.t);
    for (int i = 0; i < p; ++i) {
      out << "," << format_double(b.lo(i));
    }
    for (int i = 0; i < p; ++i) {
      out << "," << format_double(b.hi(i));
    }
    for (int i = 0; i < p; ++i) {
      out << "," << format_double(b.hi(i) - b.lo(i));
    }
    out << "\n";
  }
}

void write_summary_json(const std::string & path, const MetricsSummary & m)
{
  std::ofstream out = open_out(path);
  out << summary_to_json(m).dump(2) << "\n";
}

void write_run_outputs(const std::string & dir, const RunResult & r, uint64_t seed, const Overrides & o)
{
  std::filesystem::create_directories(dir);
  write_epochs_csv(dir + "/epochs.csv", r.log);
  write_trajectory_csv(dir + "/trajectory.csv", r.log, r.scenario);
  write_bounds_csv(dir + "/bounds.csv", r.log);
  write_summary_json(dir + "/summary.json", r.summary);
  json cfg;
  cfg["scenario"] = rounded(scenario_to_json(r.scenario));
  cfg["seed"] = seed;
  json ov = json::object();
  if (o.method) {
    ov["method"] = to_string(*o.method);
  }
  if (o.budget_pct) {
    ov["budget_pct"] = num(*o.budget_pct);
  }
  if (o.rollouts) {
    ov["rollouts"] = *o.rollouts;
  }
  cfg["overrides"] = ov;
  std::ofstream out = open_out(dir + "/config.json");
  out << cfg.dump(2) << "\n";
}

void write_table_csv(const std::string & path, const SweepTable & table)
{
  std::ofstream out = open_out(path);
  std::size_t p = 0;
  for (const auto & row : table.rows) {
    p = std::max(p, row.summary.uncertainty_reduction_pct.size());
  }
  out << "method,seed,mu_planned,success,lap_count,first_lap_time,last_lap_time,total_cost,cost_pct_of_baseline,"
         "budget_consumed_pct,informative_commits";
  for (std::size_t i = 0; i < p; ++i) {
    out << ",reduction_pct_" << i;
  }
  out << "\n";
  for (const auto & row : table.rows) {
    const MetricsSummary & m = row.summary;
    out << m.method << "," << m.seed << "," << (m.mu_planned ? format_double(*m.mu_planned) : "") << ","
        << (m.safe_run ? 1 : 0) << "," << m.lap_times.size() << ","
        << (m.lap_times.empty() ? "" : format_double(m.lap_times.front())) << ","
        << (m.lap_times.empty() ? "" : format_double(m.lap_times.back())) << "," << format_double(m.total_cost) << ","
        << format_double(m.cost_pct_of_baseline) << ","
        << (m.budget_consumed_pct ? format_double(*m.budget_consumed_pct) : "") << "," << m.informative_commits;
    for (std::size_t i = 0; i < p; ++i) {
      out << "," << (i < m.uncertainty_reduction_pct.size() ? format_double(m.uncertainty_reduction_pct[i]) : "");
    }
    out << "\n";
  }
}

void write_aggregate_csv(const std::string & path, const SweepTable & table)
{
  std::ofstream out = open_out(path);
  std::size_t p = 0;
  for (const auto & a : table.aggregates) {
    p = std::max(p, a.mean_reduction_pct.size());
  }
  out << "method,trials,safe_runs,safe_run_pct,mean_lap_time,mean_budget_consumed_pct";
  for (std::size_t i = 0; i < p; ++i) {
    out << ",mean_reduction_pct_" << i;
  }
  out << "\n";
  for (const auto & a : table.aggregates) {
    out << a.method << "," << a.trials << "," << a.safe_runs << "," << format_double(a.safe_run_pct) << ","
        << format_double(a.mean_lap_time) << "," << format_double(a.mean_budget_consumed_pct);
    for (std::size_t i = 0; i < p; ++i) {
      out << "," << (i < a.mean_reduction_pct.size() ? format_double(a.mean_reduction_pct[i]) : "");
    }
    out << "\n";
  }
}

}  // namespace dualgk
