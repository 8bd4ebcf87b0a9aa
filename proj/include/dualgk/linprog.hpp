#pragma once

#include <Eigen/Dense>

#include <limits>

namespace dualgk
{

// minimize c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi.
// Empty lo / hi default to 0 and +inf respectively.
struct LinearProgram
{
  Eigen::VectorXd c;
  Eigen::MatrixXd A_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char * to_string(LpStatus status);

struct LpResult
{
  LpStatus status{LpStatus::Infeasible};
  Eigen::VectorXd x;
  double value{std::numeric_limits<double>::quiet_NaN()};
  // Multipliers with c = A_ub' y_ub + A_eq' y_eq + r; y_ub <= 0 at optimum.
  Eigen::VectorXd dual_ub;
  Eigen::VectorXd dual_eq;
  int iterations{0};
};

inline constexpr double kLpTolerance = 1e-8;

LpResult solve_lp(const LinearProgram & lp);

struct L1Preimage
{
  bool feasible{false};
  Eigen::VectorXd lambda;
  double l1{std::numeric_limits<double>::infinity()};
};

// min ||lambda||_1 s.t. A' lambda = d.
L1Preimage min_l1_preimage(const Eigen::MatrixXd & A, const Eigen::VectorXd & d);

}  // namespace dualgk
