#include "dualgk/racing.hpp"

#include <cmath>

namespace dualgk
{

TireState tire_state(const CarParams & p, const Vec & x)
{
  using namespace car_index;
  TireState t;
  const double den = std::max(x(vx) + p.slip_eps, 1e-3);
  t.alpha_f = x(delta) - std::atan((p.l_f * x(omega) + x(vy)) / den);
  t.alpha_r = std::atan((p.l_r * x(omega) - x(vy)) / den);
  const double l = p.l_f + p.l_r;
  t.Fz_f = p.m * p.gravity * p.l_r / (2.0 * l);
  t.Fz_r = p.m * p.gravity * p.l_f / (2.0 * l);
  t.Fy_f_bar = t.Fz_f * std::sin(p.C_f * std::atan(p.B_f * t.alpha_f));
  t.Fy_r_bar = t.Fz_r * std::sin(p.C_r * std::atan(p.B_r * t.alpha_r));
  return t;
}

Vec car_dynamics(const CarParams & p, const Vec & x, const Vec & u, double mu, const Vec & w)
{
  using namespace car_index;
  const TireState t = tire_state(p, x);
  const double l = p.l_f + p.l_r;
  const double Fyf = mu * t.Fy_f_bar;
  const double Fyr = mu * t.Fy_r_bar;
  const double Fd = u(0);
  const double Fb = u(1);
  const double Fxf = 0.5 * p.k_d * Fd + 0.5 * p.k_b * Fb - 0.5 * p.f_r * p.m * p.gravity * p.l_r / l;
  const double Fxr = 0.5 * (1.0 - p.k_d) * Fd + 0.5 * (1.0 - p.k_b) * Fb - 0.5 * p.f_r * p.m * p.gravity * p.l_f / l;
  const double c = std::cos(x(delta));
  const double s = std::sin(x(delta));
  Vec r(7);
  r(px) = x(vx) * std::cos(x(psi)) - x(vy) * std::sin(x(psi));
  r(py) = x(vx) * std::sin(x(psi)) + x(vy) * std::cos(x(psi));
  r(psi) = x(omega);
  r(vx) = (2.0 * Fxr + 2.0 * Fxf * c - 2.0 * Fyf * s) / p.m - 0.5 * p.rho * p.A_front * p.C_d_aero * x(vx) * x(vx) +
          x(omega) * x(vy);
  r(vy) = (2.0 * Fyr + 2.0 * Fyf * c + 2.0 * Fxf * s) / p.m - x(omega) * x(vx);
  r(omega) = (-2.0 * Fyr * p.l_r + (2.0 * Fyf * c + 2.0 * Fxf * s) * p.l_f) / p.J_z;
  r(delta) = u(2);
  if (w.size() == r.size()) {
    r += w;
  }
  return r;
}

Mat car_regressor(const CarParams & p, const Vec & x)
{
  using namespace car_index;
  const TireState t = tire_state(p, x);
  const double c = std::cos(x(delta));
  const double s = std::sin(x(delta));
  Mat phi = Mat::Zero(7, 1);
  phi(vx, 0) = -2.0 / p.m * s * t.Fy_f_bar;
  phi(vy, 0) = 2.0 / p.m * (t.Fy_r_bar + c * t.Fy_f_bar);
  phi(omega, 0) = (-2.0 * p.l_r * t.Fy_r_bar + 2.0 * p.l_f * c * t.Fy_f_bar) / p.J_z;
  return phi;
}

ModelSpec make_car_model(const CarParams & p, double mu_true)
{
  ModelSpec m;
  m.name = "racing";
  m.state_dim = 7;
  m.input_dim = 3;
  m.param_dim = 1;
  const Vec zero_u = Vec::Zero(3);
  const Vec no_w;
  m.f0 = [p, zero_u, no_w](const Vec & x) { return car_dynamics(p, x, zero_u, 0.0, no_w); };
  m.g0 = [p](const Vec & x) {
    using namespace car_index;
    const double c = std::cos(x(delta));
    const double s = std::sin(x(delta));
    Mat G = Mat::Zero(7, 3);
    G(vx, 0) = ((1.0 - p.k_d) + p.k_d * c) / p.m;
    G(vx, 1) = ((1.0 - p.k_b) + p.k_b * c) / p.m;
    G(vy, 0) = p.k_d * s / p.m;
    G(vy, 1) = p.k_b * s / p.m;
    G(omega, 0) = p.k_d * s * p.l_f / p.J_z;
    G(omega, 1) = p.k_b * s * p.l_f / p.J_z;
    G(delta, 2) = 1.0;
    return G;
  };
  m.regressor = [p](const Vec & x, const Vec &) { return car_regressor(p, x); };
  m.fused_rate = [p, no_w](const Vec & x, const Vec & u, const Vec & theta) {
    return car_dynamics(p, x, u, theta(0), no_w);
  };
  m.true_theta = vec({mu_true});
  m.disturbance_bound = p.disturbance_bound;
  const double big = 1e6;
  m.state_bounds = {
    vec({-big, -big, -big, p.v_min, -big, -big, -p.steer_limit}), vec({big, big, big, p.v_max, big, big, p.steer_limit})};
  m.input_bounds = {
    vec({0.0, -p.brake_max, -p.steer_rate_limit}), vec({p.drive_max, 0.0, p.steer_rate_limit})};
  m.dt = 0.02;
  return m;
}

}  // namespace dualgk
