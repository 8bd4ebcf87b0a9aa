#include "dualgk/bench.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace dualgk
{

using nlohmann::json;

const char * to_string(ModelKind k)
{
  switch (k) {
    case ModelKind::DragQuad: return "drag_quad";
    case ModelKind::VectorDragQuad: return "vector_drag_quad";
    case ModelKind::Racing: return "racing";
  }
  return "unknown";
}

namespace
{

[[noreturn]] void fail(const std::string & path, const std::string & what)
{
  throw ScenarioError(path + ": " + what);
}

// Reads fields of one JSON object, tracking which keys were consumed.
class Fields
{
public:
  Fields(const json * j, std::string path) : j_(j), path_(std::move(path))
  {
    if (j_ && !j_->is_object()) {
      fail(path_, "expected an object");
    }
  }

  std::string at(const std::string & key) const { return path_.empty() ? key : path_ + "." + key; }

  const json * find(const std::string & key)
  {
    used_.insert(key);
    if (!j_) {
      return nullptr;
    }
    auto it = j_->find(key);
    return it == j_->end() || it->is_null() ? nullptr : &*it;
  }

  bool has(const std::string & key) const { return j_ && j_->contains(key) && !(*j_)[key].is_null(); }

  double number(const std::string & key, double def)
  {
    const json * v = find(key);
    if (!v) {
      return def;
    }
    if (!v->is_number()) {
      fail(at(key), "expected a number");
    }
    return v->get<double>();
  }

  double positive(const std::string & key, double def)
  {
    double v = number(key, def);
    if (!(v > 0.0)) {
      fail(at(key), "must be positive");
    }
    return v;
  }

  double non_negative(const std::string & key, double def)
  {
    double v = number(key, def);
    if (!(v >= 0.0)) {
      fail(at(key), "must be non-negative");
    }
    return v;
  }

  long long integer(const std::string & key, long long def, long long min_value)
  {
    const json * v = find(key);
    if (!v) {
      return def;
    }
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
      fail(at(key), "expected an integer");
    }
    long long r = v->get<long long>();
    if (r < min_value) {
      fail(at(key), "must be at least " + std::to_string(min_value));
    }
    return r;
  }

  std::string string(const std::string & key, const std::string & def)
  {
    const json * v = find(key);
    if (!v) {
      return def;
    }
    if (!v->is_string()) {
      fail(at(key), "expected a string");
    }
    return v->get<std::string>();
  }

  std::string required_string(const std::string & key)
  {
    if (!has(key)) {
      fail(at(key), "missing required field");
    }
    return string(key, "");
  }

  std::vector<double> numbers(const std::string & key, const std::vector<double> & def, int size = -1)
  {
    const json * v = find(key);
    if (!v) {
      return def;
    }
    return parse_numbers(*v, at(key), size);
  }

  std::vector<double> required_numbers(const std::string & key, int size = -1)
  {
    if (!has(key)) {
      fail(at(key), "missing required field");
    }
    return numbers(key, {}, size);
  }

  static std::vector<double> parse_numbers(const json & v, const std::string & path, int size)
  {
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(path + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    if (size >= 0 && static_cast<int>(out.size()) != size) {
      fail(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(out.size()));
    }
    return out;
  }

  Fields child(const std::string & key) { return Fields(find(key), at(key)); }

  const json * array(const std::string & key)
  {
    const json * v = find(key);
    if (v && !v->is_array()) {
      fail(at(key), "expected an array");
    }
    return v;
  }

  // Unknown keys are rejected so typos surface.
  void finish() const
  {
    if (!j_) {
      return;
    }
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) {
        fail(at(it.key()), "unknown field");
      }
    }
  }

private:
  const json * j_;
  std::string path_;
  std::set<std::string> used_;
};

Vec to_vec(const std::vector<double> & v, const std::string & path)
{
  if (v.size() > static_cast<std::size_t>(kMaxDim)) {
    fail(path, "dimension exceeds " + std::to_string(kMaxDim));
  }
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v[i];
  }
  return out;
}

std::vector<double> to_std(const Vec & v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::Vector3d to_v3(const std::vector<double> & v)
{
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

json v3_json(const Eigen::Vector3d & v)
{
  return json::array({v.x(), v.y(), v.z()});
}

CemConfig parse_cem(Fields f, const CemConfig & def)
{
  CemConfig c;
  c.samples = static_cast<int>(f.integer("samples", def.samples, 2));
  c.iterations = static_cast<int>(f.integer("iterations", def.iterations, 1));
  c.elites = static_cast<int>(f.integer("elites", def.elites, 1));
  c.smoothing = f.non_negative("smoothing", def.smoothing);
  c.min_std_fraction = f.non_negative("min_std_fraction", def.min_std_fraction);
  f.finish();
  if (c.elites > c.samples) {
    fail(f.at("elites"), "cannot exceed samples");
  }
  return c;
}

json cem_json(const CemConfig & c)
{
  return {{"samples", c.samples}, {"iterations", c.iterations}, {"elites", c.elites}, {"smoothing", c.smoothing},
          {"min_std_fraction", c.min_std_fraction}};
}

int expected_param_dim(ModelKind k)
{
  return k == ModelKind::VectorDragQuad ? 2 : 1;
}

int expected_state_dim(ModelKind k)
{
  return k == ModelKind::Racing ? 7 : 6;
}

InfoObjective parse_info(Fields f, const InfoObjective & def, int n)
{
  InfoObjective info = def;
  info.gamma = f.non_negative("gamma", def.gamma);
  info.epsilon_reg = f.positive("epsilon_reg", def.epsilon_reg);
  if (const json * w = f.array("W_theta")) {
    if (static_cast<int>(w->size()) != n) {
      fail(f.at("W_theta"), "expected " + std::to_string(n) + " rows");
    }
    Mat W(n, n);
    for (int r = 0; r < n; ++r) {
      auto row = Fields::parse_numbers((*w)[static_cast<std::size_t>(r)], f.at("W_theta") + "[" + std::to_string(r) + "]", n);
      for (int c = 0; c < n; ++c) {
        W(r, c) = row[static_cast<std::size_t>(c)];
      }
    }
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      fail(f.at("W_theta"), "must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(W.topLeftCorner(n, n)));
    if (llt.info() != Eigen::Success) {
      fail(f.at("W_theta"), "must be positive definite");
    }
    info.W_theta = W;
  }
  f.finish();
  return info;
}

json info_json(const InfoObjective & info, int n)
{
  Mat W = info.W_theta.size() == 0 ? Mat(Mat::Identity(n, n)) : info.W_theta;
  json rows = json::array();
  for (int r = 0; r < n; ++r) {
    json row = json::array();
    for (int c = 0; c < n; ++c) {
      row.push_back(W(r, c));
    }
    rows.push_back(row);
  }
  return {{"gamma", info.gamma}, {"epsilon_reg", info.epsilon_reg}, {"W_theta", rows}};
}

DriverConfig parse_driver(Fields f, const DriverConfig & def)
{
  DriverConfig d;
  d.lookahead_min = f.positive("lookahead_min", def.lookahead_min);
  d.lookahead_time = f.non_negative("lookahead_time", def.lookahead_time);
  d.steer_servo = f.positive("steer_servo", def.steer_servo);
  d.speed_gain = f.positive("speed_gain", def.speed_gain);
  d.preview_time = f.non_negative("preview_time", def.preview_time);
  d.steer_fraction = f.positive("steer_fraction", def.steer_fraction);
  d.brake_taper_speed = f.positive("brake_taper_speed", def.brake_taper_speed);
  f.finish();
  return d;
}

json driver_json(const DriverConfig & d)
{
  return {{"lookahead_min", d.lookahead_min}, {"lookahead_time", d.lookahead_time}, {"steer_servo", d.steer_servo},
          {"speed_gain", d.speed_gain}, {"preview_time", d.preview_time}, {"steer_fraction", d.steer_fraction},
          {"brake_taper_speed", d.brake_taper_speed}};
}

void parse_quad(Fields f, Scenario & s)
{
  QuadScenario & q = s.quad;
  {
    Fields p = f.child("params");
    q.params.gravity = p.positive("gravity", q.params.gravity);
    q.params.accel_limit = p.positive("accel_limit", q.params.accel_limit);
    q.params.speed_limit = p.positive("speed_limit", q.params.speed_limit);
    q.params.disturbance_bound = p.non_negative("disturbance_bound", q.params.disturbance_bound);
    q.params.dt = p.positive("dt", q.params.dt);
    p.finish();
  }
  {
    Fields m = f.child("map");
    Fields b = m.child("bounds");
    q.task.map.bounds.lo = to_v3(b.required_numbers("lo", 3));
    q.task.map.bounds.hi = to_v3(b.required_numbers("hi", 3));
    b.finish();
    if (const json * obs = m.array("obstacles")) {
      for (std::size_t i = 0; i < obs->size(); ++i) {
        Fields o(&(*obs)[i], m.at("obstacles") + "[" + std::to_string(i) + "]");
        q.task.map.obstacles.push_back({to_v3(o.required_numbers("lo", 3)), to_v3(o.required_numbers("hi", 3))});
        o.finish();
      }
    }
    q.task.map.speed_limit = m.positive("speed_limit", q.params.speed_limit);
    m.finish();
  }
  {
    Fields g = f.child("goal");
    q.task.goal.center = to_v3(g.required_numbers("center", 3));
    q.task.goal.radius = g.positive("radius", q.task.goal.radius);
    q.task.goal.speed_radius = g.positive("speed_radius", q.task.goal.speed_radius);
    g.finish();
  }
  {
    Fields c = f.child("cost");
    q.task.alpha = c.non_negative("alpha", q.task.alpha);
    q.task.beta = c.non_negative("beta", q.task.beta);
    c.finish();
  }
  q.task.t_final = f.positive("t_final", q.task.t_final);
  if (const json * g = f.array("guide")) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      q.task.guide.push_back(to_v3(Fields::parse_numbers((*g)[i], f.at("guide") + "[" + std::to_string(i) + "]", 3)));
    }
  }
  q.task.guide_speed = f.positive("guide_speed", q.task.guide_speed);
  {
    Fields b = f.child("backup");
    BackupConfig & c = q.backup;
    c.block_dt = b.positive("block_dt", c.block_dt);
    c.plan_dt = b.positive("plan_dt", c.plan_dt);
    c.constraint_margin = b.non_negative("constraint_margin", c.constraint_margin);
    c.cem = parse_cem(b.child("cem"), c.cem);
    c.init_std = b.positive("init_std", c.init_std);
    c.kp = b.non_negative("kp", c.kp);
    c.kd = b.non_negative("kd", c.kd);
    c.tube_prediction_gain = b.non_negative("tube_prediction_gain", c.tube_prediction_gain);
    Fields t = b.child("tube");
    c.tube.n_tube = static_cast<int>(t.integer("n_tube", c.tube.n_tube, 1));
    c.tube.n_holdout = static_cast<int>(t.integer("n_holdout", c.tube.n_holdout, 1));
    c.tube.inflation = t.positive("inflation", c.tube.inflation);
    c.tube.max_passes = static_cast<int>(t.integer("max_passes", c.tube.max_passes, 1));
    c.tube.floor_time = t.non_negative("floor_time", c.tube.floor_time);
    t.finish();
    b.finish();
  }
  {
    Fields i = f.child("informative");
    InformativeConfig & c = q.informative;
    c.block_dt = i.positive("block_dt", c.block_dt);
    c.plan_dt = i.positive("plan_dt", c.plan_dt);
    c.cem = parse_cem(i.child("cem"), c.cem);
    c.init_std = i.positive("init_std", c.init_std);
    c.terminal_weight = i.non_negative("terminal_weight", c.terminal_weight);
    c.delta_term = i.positive("delta_term", c.delta_term);
    c.refine_blocks = static_cast<int>(i.integer("refine_blocks", c.refine_blocks, 0));
    c.refine_iterations = static_cast<int>(i.integer("refine_iterations", c.refine_iterations, 0));
    i.finish();
  }
  q.info = parse_info(f.child("info"), q.info, expected_state_dim(s.model));
  f.finish();
}

json quad_json(const Scenario & s)
{
  const QuadScenario & q = s.quad;
  json obs = json::array();
  for (const auto & o : q.task.map.obstacles) {
    obs.push_back({{"lo", v3_json(o.lo)}, {"hi", v3_json(o.hi)}});
  }
  json guide = json::array();
  for (const auto & g : q.task.guide) {
    guide.push_back(v3_json(g));
  }
  const BackupConfig & b = q.backup;
  const InformativeConfig & i = q.informative;
  return {
    {"params",
     {{"gravity", q.params.gravity}, {"accel_limit", q.params.accel_limit}, {"speed_limit", q.params.speed_limit},
      {"disturbance_bound", q.params.disturbance_bound}, {"dt", q.params.dt}}},
    {"map",
     {{"bounds", {{"lo", v3_json(q.task.map.bounds.lo)}, {"hi", v3_json(q.task.map.bounds.hi)}}},
      {"obstacles", obs}, {"speed_limit", q.task.map.speed_limit}}},
    {"goal",
     {{"center", v3_json(q.task.goal.center)}, {"radius", q.task.goal.radius},
      {"speed_radius", q.task.goal.speed_radius}}},
    {"cost", {{"alpha", q.task.alpha}, {"beta", q.task.beta}}},
    {"t_final", q.task.t_final},
    {"guide", guide},
    {"guide_speed", q.task.guide_speed},
    {"backup",
     {{"block_dt", b.block_dt}, {"plan_dt", b.plan_dt}, {"constraint_margin", b.constraint_margin},
      {"cem", cem_json(b.cem)}, {"init_std", b.init_std}, {"kp", b.kp}, {"kd", b.kd},
      {"tube_prediction_gain", b.tube_prediction_gain},
      {"tube",
       {{"n_tube", b.tube.n_tube}, {"n_holdout", b.tube.n_holdout}, {"inflation", b.tube.inflation},
        {"max_passes", b.tube.max_passes}, {"floor_time", b.tube.floor_time}}}}},
    {"informative",
     {{"block_dt", i.block_dt}, {"plan_dt", i.plan_dt}, {"cem", cem_json(i.cem)}, {"init_std", i.init_std},
      {"terminal_weight", i.terminal_weight}, {"delta_term", i.delta_term}, {"refine_blocks", i.refine_blocks},
      {"refine_iterations", i.refine_iterations}}},
    {"info", info_json(q.info, expected_state_dim(s.model))}};
}

void parse_racing(Fields f, Scenario & s)
{
  RacingScenario & r = s.racing;
  {
    Fields t = f.child("track");
    const json * w = t.array("waypoints");
    if (!w) {
      fail(t.at("waypoints"), "missing required field");
    }
    for (std::size_t i = 0; i < w->size(); ++i) {
      auto p = Fields::parse_numbers((*w)[i], t.at("waypoints") + "[" + std::to_string(i) + "]", 2);
      r.waypoints.emplace_back(p[0], p[1]);
    }
    if (r.waypoints.size() < 4) {
      fail(t.at("waypoints"), "need at least 4 waypoints");
    }
    r.half_width = t.positive("half_width", r.half_width);
    t.finish();
  }
  {
    Fields c = f.child("car");
    CarParams & p = r.car;
    p.m = c.positive("m", p.m);
    p.l_f = c.positive("l_f", p.l_f);
    p.l_r = c.positive("l_r", p.l_r);
    p.J_z = c.positive("J_z", p.J_z);
    p.B_f = c.positive("B_f", p.B_f);
    p.C_f = c.positive("C_f", p.C_f);
    p.B_r = c.positive("B_r", p.B_r);
    p.C_r = c.positive("C_r", p.C_r);
    p.rho = c.non_negative("rho", p.rho);
    p.A_front = c.non_negative("A_front", p.A_front);
    p.C_d_aero = c.non_negative("C_d_aero", p.C_d_aero);
    p.k_d = c.non_negative("k_d", p.k_d);
    p.k_b = c.non_negative("k_b", p.k_b);
    p.f_r = c.non_negative("f_r", p.f_r);
    p.gravity = c.positive("gravity", p.gravity);
    p.slip_eps = c.positive("slip_eps", p.slip_eps);
    p.steer_limit = c.positive("steer_limit", p.steer_limit);
    p.steer_rate_limit = c.positive("steer_rate_limit", p.steer_rate_limit);
    p.drive_max = c.positive("drive_max", p.drive_max);
    p.brake_max = c.positive("brake_max", p.brake_max);
    p.v_min = c.number("v_min", p.v_min);
    p.v_max = c.positive("v_max", p.v_max);
    p.vehicle_half_width = c.non_negative("vehicle_half_width", p.vehicle_half_width);
    p.disturbance_bound = c.non_negative("disturbance_bound", p.disturbance_bound);
    c.finish();
    if (p.k_d > 1.0) {
      fail(c.at("k_d"), "must lie in [0, 1]");
    }
    if (p.k_b > 1.0) {
      fail(c.at("k_b"), "must lie in [0, 1]");
    }
  }
  {
    Fields fb = f.child("fallback");
    r.fallback.v_safe = fb.positive("v_safe", r.fallback.v_safe);
    r.fallback.driver = parse_driver(fb.child("driver"), r.fallback.driver);
    fb.finish();
  }
  {
    Fields p = f.child("planner");
    RacingPlannerConfig & c = r.planner;
    c.block_dt = p.positive("block_dt", c.block_dt);
    c.mppi.samples = static_cast<int>(p.integer("samples", c.mppi.samples, 2));
    c.mppi.iterations = static_cast<int>(p.integer("iterations", c.mppi.iterations, 1));
    c.mppi.temperature = p.positive("temperature", c.mppi.temperature);
    c.noise_std = to_vec(p.numbers("noise_std", to_std(c.noise_std), 2), p.at("noise_std"));
    c.dv_limit = p.non_negative("dv_limit", c.dv_limit);
    c.dy_margin = p.non_negative("dy_margin", c.dy_margin);
    Fields pr = p.child("profile");
    c.profile.lateral_fraction = pr.positive("lateral_fraction", c.profile.lateral_fraction);
    c.profile.v_cap = pr.positive("v_cap", c.profile.v_cap);
    c.profile.accel = pr.positive("accel", c.profile.accel);
    c.profile.decel = pr.positive("decel", c.profile.decel);
    c.profile.curvature_window = pr.non_negative("curvature_window", c.profile.curvature_window);
    pr.finish();
    c.driver = parse_driver(p.child("driver"), c.driver);
    Fields w = p.child("weights");
    c.weights.q_progress = w.non_negative("q_progress", c.weights.q_progress);
    c.weights.q_epsi = w.non_negative("q_epsi", c.weights.q_epsi);
    c.weights.q_v = w.non_negative("q_v", c.weights.q_v);
    c.weights.q_vy = w.non_negative("q_vy", c.weights.q_vy);
    c.weights.q_omega = w.non_negative("q_omega", c.weights.q_omega);
    c.weights.R = to_vec(w.numbers("R", to_std(c.weights.R), 3), w.at("R"));
    c.weights.R_delta = to_vec(w.numbers("R_delta", to_std(c.weights.R_delta), 3), w.at("R_delta"));
    c.weights.q_boundary = w.non_negative("q_boundary", c.weights.q_boundary);
    c.weights.boundary_margin = w.non_negative("boundary_margin", c.weights.boundary_margin);
    w.finish();
    p.finish();
  }
  r.info = parse_info(f.child("info"), r.info, expected_state_dim(s.model));
  r.T_B = f.positive("T_B", r.T_B);
  r.T_fb = f.positive("T_fb", r.T_fb);
  r.n_verify = static_cast<int>(f.integer("n_verify", r.n_verify, 1));
  r.delta = f.positive("delta", r.delta);
  if (r.delta >= 1.0) {
    fail(f.at("delta"), "must lie in (0, 1)");
  }
  r.laps = static_cast<int>(f.integer("laps", r.laps, 1));
  r.time_limit = f.positive("time_limit", r.time_limit);
  r.mu_planned_grid = f.numbers("mu_planned_grid", r.mu_planned_grid);
  if (r.mu_planned_grid.empty()) {
    fail(f.at("mu_planned_grid"), "must not be empty");
  }
  if (f.has("mu_planned")) {
    r.mu_planned = f.positive("mu_planned", 1.0);
  } else {
    f.find("mu_planned");
  }
  f.finish();
}

json racing_json(const Scenario & s)
{
  const RacingScenario & r = s.racing;
  json wps = json::array();
  for (const auto & p : r.waypoints) {
    wps.push_back(json::array({p.x(), p.y()}));
  }
  const CarParams & p = r.car;
  const RacingPlannerConfig & c = r.planner;
  json out = {
    {"track", {{"waypoints", wps}, {"half_width", r.half_width}}},
    {"car",
     {{"m", p.m}, {"l_f", p.l_f}, {"l_r", p.l_r}, {"J_z", p.J_z}, {"B_f", p.B_f}, {"C_f", p.C_f}, {"B_r", p.B_r},
      {"C_r", p.C_r}, {"rho", p.rho}, {"A_front", p.A_front}, {"C_d_aero", p.C_d_aero}, {"k_d", p.k_d},
      {"k_b", p.k_b}, {"f_r", p.f_r}, {"gravity", p.gravity}, {"slip_eps", p.slip_eps},
      {"steer_limit", p.steer_limit}, {"steer_rate_limit", p.steer_rate_limit}, {"drive_max", p.drive_max},
      {"brake_max", p.brake_max}, {"v_min", p.v_min}, {"v_max", p.v_max},
      {"vehicle_half_width", p.vehicle_half_width}, {"disturbance_bound", p.disturbance_bound}}},
    {"fallback", {{"v_safe", r.fallback.v_safe}, {"driver", driver_json(r.fallback.driver)}}},
    {"planner",
     {{"block_dt", c.block_dt}, {"samples", c.mppi.samples}, {"iterations", c.mppi.iterations},
      {"temperature", c.mppi.temperature}, {"noise_std", to_std(c.noise_std)}, {"dv_limit", c.dv_limit},
      {"dy_margin", c.dy_margin},
      {"profile",
       {{"lateral_fraction", c.profile.lateral_fraction}, {"v_cap", c.profile.v_cap}, {"accel", c.profile.accel},
        {"decel", c.profile.decel}, {"curvature_window", c.profile.curvature_window}}},
      {"driver", driver_json(c.driver)},
      {"weights",
       {{"q_progress", c.weights.q_progress}, {"q_epsi", c.weights.q_epsi}, {"q_v", c.weights.q_v},
        {"q_vy", c.weights.q_vy}, {"q_omega", c.weights.q_omega}, {"R", to_std(c.weights.R)},
        {"R_delta", to_std(c.weights.R_delta)}, {"q_boundary", c.weights.q_boundary},
        {"boundary_margin", c.weights.boundary_margin}}}}},
    {"info", info_json(r.info, expected_state_dim(s.model))},
    {"T_B", r.T_B},
    {"T_fb", r.T_fb},
    {"n_verify", r.n_verify},
    {"delta", r.delta},
    {"laps", r.laps},
    {"time_limit", r.time_limit},
    {"mu_planned_grid", r.mu_planned_grid},
  };
  out["mu_planned"] = r.mu_planned ? json(*r.mu_planned) : json(nullptr);
  return out;
}

}  // namespace

Scenario parse_scenario(const json & j)
{
  Fields f(&j, "");
  Scenario s;
  s.name = f.string("name", "scenario");
  const std::string model = f.required_string("model");
  if (model == "drag_quad") {
    s.model = ModelKind::DragQuad;
  } else if (model == "vector_drag_quad") {
    s.model = ModelKind::VectorDragQuad;
  } else if (model == "racing") {
    s.model = ModelKind::Racing;
  } else {
    fail("model", "unknown model '" + model + "' (drag_quad, vector_drag_quad, racing)");
  }
  try {
    s.method = parse_method(f.string("method", "dual_gatekeeper"));
  } catch (const std::invalid_argument & e) {
    fail("method", e.what());
  }
  const int p = expected_param_dim(s.model);
  const int n = expected_state_dim(s.model);
  s.x0 = to_vec(f.required_numbers("initial_state", n), "initial_state");
  s.true_theta = to_vec(f.required_numbers("true_theta", p), "true_theta");
  {
    Fields b = f.child("initial_box");
    Vec lo = to_vec(b.required_numbers("lo", p), b.at("lo"));
    Vec hi = to_vec(b.required_numbers("hi", p), b.at("hi"));
    b.finish();
    if ((hi.array() < lo.array()).any()) {
      fail("initial_box", "hi must not be below lo");
    }
    s.box0 = ParameterBox(lo, hi);
    if (!s.box0.contains(s.true_theta)) {
      fail("true_theta", "must lie inside initial_box");
    }
  }
  if (const json * seeds = f.array("seeds")) {
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      if (!(*seeds)[i].is_number_unsigned() && !((*seeds)[i].is_number_integer() && (*seeds)[i].get<long long>() >= 0)) {
        fail("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
      }
      s.seeds.push_back((*seeds)[i].get<uint64_t>());
    }
    if (s.seeds.empty()) {
      fail("seeds", "must not be empty");
    }
  } else {
    s.seeds = {1};
  }
  {
    Fields b = f.child("budget");
    const std::string mode = b.string("mode", s.model == ModelKind::Racing ? "absolute" : "percent");
    if (mode != "percent" && mode != "absolute") {
      fail(b.at("mode"), "expected 'percent' or 'absolute'");
    }
    s.budget.percent = mode == "percent";
    s.budget.value = b.non_negative("value", s.model == ModelKind::Racing ? 100.0 : 110.0);
    b.finish();
  }
  {
    Fields e = f.child("engine");
    EngineConfig & c = s.engine;
    if (s.model == ModelKind::Racing) {
      c.min_relative_gain = 0.1;
    }
    c.T_c = e.positive("T_c", c.T_c);
    c.lambda_discount = e.non_negative("lambda_discount", c.lambda_discount);
    c.n_shrinkage_rollouts = static_cast<int>(e.integer("shrinkage_rollouts", c.n_shrinkage_rollouts, 1));
    const std::string pred = e.string("predictor", "rollout");
    if (pred == "rollout") {
      c.predictor = PredictorKind::Rollout;
    } else if (pred == "consistency") {
      c.predictor = PredictorKind::Consistency;
    } else {
      fail(e.at("predictor"), "expected 'rollout' or 'consistency'");
    }
    const std::string agg = e.string("aggregation", "mean");
    if (agg == "mean") {
      c.cost_aggregation = Aggregation::Mean;
    } else if (agg == "quantile") {
      c.cost_aggregation = Aggregation::Quantile;
    } else {
      fail(e.at("aggregation"), "expected 'mean' or 'quantile'");
    }
    c.min_relative_gain = e.non_negative("min_relative_gain", c.min_relative_gain);
    e.finish();
  }
  {
    Fields m = f.child("smid");
    s.smid.window = m.positive("window", s.smid.window);
    if (m.has("quadrature_margin")) {
      s.smid.quadrature_margin = m.non_negative("quadrature_margin", 0.0);
    } else {
      m.find("quadrature_margin");
    }
    s.smid.stack_capacity = static_cast<std::size_t>(m.integer("stack_capacity", static_cast<long long>(s.smid.stack_capacity), 1));
    s.smid.admission_threshold = m.non_negative("admission_threshold", s.smid.admission_threshold);
    s.smid.min_fill = static_cast<std::size_t>(m.integer("min_fill", static_cast<long long>(s.smid.min_fill), 0));
    m.finish();
  }
  if (s.model == ModelKind::Racing) {
    parse_racing(f.child("racing"), s);
    if (f.has("quad")) {
      fail("quad", "not allowed for racing scenarios");
    }
    if (s.racing.mu_planned && !(*s.racing.mu_planned > 0.0)) {
      fail("racing.mu_planned", "must be positive");
    }
  } else {
    parse_quad(f.child("quad"), s);
    if (f.has("racing")) {
      fail("racing", "not allowed for quadrotor scenarios");
    }
    if (s.method != Method::DualGatekeeper && s.method != Method::NominalGk) {
      fail("method", "quadrotor scenarios support dual_gatekeeper and nominal_gk (robust baseline)");
    }
  }
  f.finish();
  return s;
}

Scenario load_scenario(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError(path + ": cannot open scenario file");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error & e) {
    throw ScenarioError(path + ": " + e.what());
  }
  return parse_scenario(j);
}

json scenario_to_json(const Scenario & s)
{
  json seeds = json::array();
  for (auto v : s.seeds) {
    seeds.push_back(v);
  }
  json out = {
    {"name", s.name},
    {"model", to_string(s.model)},
    {"method", to_string(s.method)},
    {"initial_state", to_std(s.x0)},
    {"true_theta", to_std(s.true_theta)},
    {"initial_box", {{"lo", to_std(s.box0.lo)}, {"hi", to_std(s.box0.hi)}}},
    {"seeds", seeds},
    {"budget", {{"mode", s.budget.percent ? "percent" : "absolute"}, {"value", s.budget.value}}},
    {"engine",
     {{"T_c", s.engine.T_c}, {"lambda_discount", s.engine.lambda_discount},
      {"shrinkage_rollouts", s.engine.n_shrinkage_rollouts},
      {"predictor", s.engine.predictor == PredictorKind::Rollout ? "rollout" : "consistency"},
      {"aggregation", s.engine.cost_aggregation == Aggregation::Mean ? "mean" : "quantile"},
      {"min_relative_gain", s.engine.min_relative_gain}}},
    {"smid",
     {{"window", s.smid.window}, {"stack_capacity", s.smid.stack_capacity},
      {"admission_threshold", s.smid.admission_threshold}, {"min_fill", s.smid.min_fill}}},
  };
  out["smid"]["quadrature_margin"] = s.smid.quadrature_margin ? json(*s.smid.quadrature_margin) : json(nullptr);
  if (s.model == ModelKind::Racing) {
    out["racing"] = racing_json(s);
  } else {
    out["quad"] = quad_json(s);
  }
  return out;
}

double racing_mu_planned(const Scenario & s, uint64_t seed)
{
  if (s.racing.mu_planned) {
    return *s.racing.mu_planned;
  }
  return s.racing.mu_planned_grid[seed % s.racing.mu_planned_grid.size()];
}

ModelSpec build_model(const Scenario & s)
{
  switch (s.model) {
    case ModelKind::DragQuad: return make_drag_quadrotor(s.quad.params, s.true_theta(0));
    case ModelKind::VectorDragQuad: return make_vector_drag_quadrotor(s.quad.params, s.true_theta(0), s.true_theta(1));
    case ModelKind::Racing: {
      CarParams car = s.racing.car;
      car.mu_bounds = s.box0;
      return make_car_model(car, s.true_theta(0));
    }
  }
  throw ScenarioError("model: unsupported");
}

}  // namespace dualgk
