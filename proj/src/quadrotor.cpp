#include "dualgk/quadrotor.hpp"

#include <algorithm>
#include <cmath>

namespace dualgk
{

double CorridorMap::violation(const Vec & x, const Eigen::Vector3d & r, double rv) const
{
  Eigen::Vector3d p = x.head<3>();
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    total += std::max(0.0, bounds.lo(i) + r(i) - p(i));
    total += std::max(0.0, p(i) - (bounds.hi(i) - r(i)));
  }
  for (const auto & ob : obstacles) {
    double depth = 1e300;
    for (int i = 0; i < 3; ++i) {
      double a = p(i) - (ob.lo(i) - r(i));
      double b = (ob.hi(i) + r(i)) - p(i);
      depth = std::min(depth, std::min(a, b));
    }
    if (depth > 0.0) {
      total += depth;
    }
  }
  double speed = x.segment<3>(3).norm();
  total += std::max(0.0, speed - (speed_limit - rv));
  return total;
}

bool GoalRegion::contains(const Vec & x, double shrink) const
{
  return (x.head<3>() - center).norm() <= radius - shrink && x.segment<3>(3).norm() <= speed_radius;
}

Vec hover_input(const QuadParams & params)
{
  return vec({0.0, 0.0, params.gravity});
}

namespace
{

ModelSpec quad_base(const QuadParams & params, const char * name, int p)
{
  ModelSpec m;
  m.name = name;
  m.state_dim = 6;
  m.input_dim = 3;
  m.param_dim = p;
  double g = params.gravity;
  m.f0 = [g](const Vec & x) {
    Vec r(6);
    r << x(3), x(4), x(5), 0.0, 0.0, -g;
    return r;
  };
  m.g0 = [](const Vec &) {
    Mat G = Mat::Zero(6, 3);
    G.bottomRows(3).setIdentity();
    return G;
  };
  m.disturbance_bound = params.disturbance_bound;
  double a = params.accel_limit;
  m.input_bounds = {vec({-a, -a, g - a}), vec({a, a, g + a})};
  double big = 1e6;
  double v = params.speed_limit;
  m.state_bounds = {vec({-big, -big, -big, -v, -v, -v}), vec({big, big, big, v, v, v})};
  m.dt = params.dt;
  return m;
}

}  // namespace

ModelSpec make_drag_quadrotor(const QuadParams & params, double cd_true)
{
  ModelSpec m = quad_base(params, "drag_quad", 1);
  m.regressor = [](const Vec & x, const Vec &) {
    Mat phi = Mat::Zero(6, 1);
    Eigen::Vector3d v = x.segment<3>(3);
    phi.block<3, 1>(3, 0) = -v.norm() * v;
    return phi;
  };
  double g = params.gravity;
  m.fused_rate = [g](const Vec & x, const Vec & u, const Vec & theta) {
    Eigen::Vector3d v = x.segment<3>(3);
    Eigen::Vector3d a = -theta(0) * v.norm() * v + u.head<3>();
    a(2) -= g;
    Vec r(6);
    r << v, a;
    return r;
  };
  m.true_theta = vec({cd_true});
  return m;
}

ModelSpec make_vector_drag_quadrotor(const QuadParams & params, double cd1_true, double cd2_true)
{
  ModelSpec m = quad_base(params, "vector_drag_quad", 2);
  m.regressor = [](const Vec & x, const Vec &) {
    Mat phi = Mat::Zero(6, 2);
    Eigen::Vector3d v = x.segment<3>(3);
    phi.block<3, 1>(3, 0) = -v;
    phi.block<3, 1>(3, 1) = -v.norm() * v;
    return phi;
  };
  double g = params.gravity;
  m.fused_rate = [g](const Vec & x, const Vec & u, const Vec & theta) {
    Eigen::Vector3d v = x.segment<3>(3);
    Eigen::Vector3d a = -theta(0) * v - theta(1) * v.norm() * v + u.head<3>();
    a(2) -= g;
    Vec r(6);
    r << v, a;
    return r;
  };
  m.true_theta = vec({cd1_true, cd2_true});
  return m;
}

}  // namespace dualgk
