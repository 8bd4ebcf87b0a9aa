#pragma once

#include "dualgk/models.hpp"

#include <vector>

namespace dualgk
{

struct QuadParams
{
  double gravity{9.81};
  double accel_limit{6.0};  // per-axis authority around hover
  double speed_limit{6.0};
  double disturbance_bound{0.02};
  double dt{0.02};
};

struct AxisBox
{
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};

// 3-D corridor with box obstacles; states are [r, rdot].
struct CorridorMap
{
  AxisBox bounds;
  std::vector<AxisBox> obstacles;
  double speed_limit{6.0};

  // Zero when the state (shrunk by per-axis position radius r and speed radius rv) is admissible,
  // otherwise the penetration depth summed over violated constraints.
  double violation(const Vec & x, const Eigen::Vector3d & r, double rv) const;
  bool admissible(const Vec & x) const { return violation(x, Eigen::Vector3d::Zero(), 0.0) <= 0.0; }
};

struct GoalRegion
{
  Eigen::Vector3d center;
  double radius{1.0};
  double speed_radius{1.0};

  bool contains(const Vec & x, double shrink = 0.0) const;
};

// rddot = -Cd |rdot| rdot + g + u + d, single drag parameter.
ModelSpec make_drag_quadrotor(const QuadParams & params, double cd_true);

// rddot = -Cd1 rdot - Cd2 |rdot| rdot + g + u + d.
ModelSpec make_vector_drag_quadrotor(const QuadParams & params, double cd1_true, double cd2_true);

Vec hover_input(const QuadParams & params);

}  // namespace dualgk
