#pragma once

#include "dualgk/quadrotor.hpp"
#include "dualgk/sampling_optimizer.hpp"
#include "dualgk/smid.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dualgk
{

// Goal-directed quadrotor mission with J = int alpha |u|^2 + beta |r - r_goal|^2 dt.
struct QuadTask
{
  CorridorMap map;
  GoalRegion goal;
  double alpha{0.1};
  double beta{1.0};
  double t_final{12.0};
  std::vector<Eigen::Vector3d> guide;  // waypoints for the first warm start
  double guide_speed{2.2};
};

double quad_stage_cost(const QuadTask & task, const Vec & x, const Vec & u);

// Trapezoid in the states with the held input; reads only the given (nominal) trajectory.
double quad_trajectory_cost(const QuadTask & task, const Trajectory & nominal);

// Constraints for tube checks: state_violation is zero iff the box x +- radius lies in S.
struct TubeConstraints
{
  std::function<double(const Vec & x, const Vec & radius)> state_violation;
  BoxSet inputs;
};

TubeConstraints quad_constraints(const QuadTask & task, const ModelSpec & model);

struct TubeConfig
{
  int n_tube{100};
  int n_holdout{100};
  double inflation{1.2};
  int max_passes{3};
  // Additive state radius floor = wbar * floor_time; input floor = |K| times that.
  double floor_time{0.5};
};

struct TubeEstimate
{
  std::vector<Vec> state_radii;  // one per nominal grid point
  std::vector<Vec> input_radii;  // one per nominal input
  double holdout_coverage{1.0};
};

// u = p_u(t) + K (p_x(t) - x), saturated into U.
Vec ancillary_feedback(const ModelSpec & model, const Trajectory & nominal, const Mat & K, double t, const Vec & x);
Policy ancillary_policy(const ModelSpec & model, const Trajectory & nominal, const Mat & K);

// PD gains on position / velocity error for double-integrator style models.
Mat quad_ancillary_gains(double kp, double kd);

// Per-time max deviation over n rollouts (box vertices first, then uniform samples), times inflation.
TubeEstimate estimate_tube(
  const ModelSpec & model, const Trajectory & nominal, const Mat & K, const ParameterBox & box, int n,
  double inflation, uint64_t seed, double floor_time = 0.0);

// Fraction of fresh rollouts whose state and unsaturated input deviations stay inside the tube.
double tube_coverage(
  const ModelSpec & model, const Trajectory & nominal, const Mat & K, const ParameterBox & box,
  const TubeEstimate & tube, int n, uint64_t seed);

// Largest tightened-constraint violation of the nominal along the tube (0 when admissible).
double tube_violation(const TubeConstraints & cons, const Trajectory & nominal, const TubeEstimate & tube);

struct BackupConfig
{
  double block_dt{0.5};
  double plan_dt{0.1};
  double constraint_margin{0.05};  // extra slack used only inside the optimizer
  CemConfig cem{64, 10, 8, 0.2, 0.02};
  double init_std{0.3};
  TubeConfig tube;
  double kp{9.0};
  double kd{6.0};
  // Optimizer-side tube guess: gain times the worst-case parametric acceleration.
  double tube_prediction_gain{1.6};
};

struct BackupPlan
{
  Trajectory nominal;
  TubeEstimate tube;
  Mat ancillary_gains;
  InputBlocks blocks;
  bool certified{false};
  double backup_horizon{0.0};
  double cost{0.0};
  int passes{0};
  std::string diagnostic;
};

Vec ancillary_feedback(const ModelSpec & model, const BackupPlan & plan, double t, const Vec & x);

// Sampled-tube backup over T_B = t_final - t_k; warm starts from `previous` when given, else from the guide path.
BackupPlan plan_backup(
  const ModelSpec & model, const QuadTask & task, const Vec & x_k, double t_k, const ParameterBox & box,
  const BackupConfig & cfg, uint64_t seed, const BackupPlan * previous = nullptr);

struct InfoObjective
{
  double gamma{1.0};
  Mat W_theta;  // n x n weight on regressor rows; empty means identity
  double epsilon_reg{1e-6};
};

// Trapezoid quadrature of Phi^T W Phi along the trajectory.
Mat information_matrix(const ModelSpec & model, const Trajectory & traj, const InfoObjective & info);
double information_logdet(const ModelSpec & model, const Trajectory & traj, const InfoObjective & info);

struct InformativeConfig
{
  double block_dt{0.5};
  double plan_dt{0.1};
  CemConfig cem{48, 8, 6, 0.2, 0.02};
  double init_std{1.5};
  double terminal_weight{200.0};
  double delta_term{0.05};
  int refine_blocks{2};
  int refine_iterations{6};
};

struct InformativeResult
{
  Trajectory traj;  // on the model grid
  InputBlocks blocks;
  double terminal_error{0.0};  // infinity norm in normalized units
  bool recoverable{false};
  double logdet{0.0};
  double stage_cost{0.0};
};

using StageCostFn = std::function<double(const Trajectory &)>;

// Minimizes stage cost - gamma logdet(I + eps I) + terminal penalty; polishes the terminal state by
// Gauss-Newton shooting on the last blocks.
InformativeResult plan_informative_segment(
  const ModelSpec & model, const Vec & x_k, double t_k, const Vec & theta_hat, double horizon,
  const Vec & terminal_state, const Vec & state_scale, const InfoObjective & info, const StageCostFn & stage_cost,
  const InputBlocks & warm_blocks, const InformativeConfig & cfg, uint64_t seed);

}  // namespace dualgk
