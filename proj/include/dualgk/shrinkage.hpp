#pragma once

#include "dualgk/smid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dualgk
{

enum class PredictorKind { Rollout, Consistency };

struct ShrinkagePrediction
{
  double delta_xi{0.0};
  std::vector<double> per_rollout;
  std::vector<ParameterBox> post_boxes;
  std::vector<double> post_widths;  // consistency method, per direction
  PredictorKind method{PredictorKind::Rollout};
  int flagged{0};
};

enum class Aggregation { Mean, Quantile };

struct RolloutPredictorConfig
{
  int n_rollouts{20};
  double window{0.2};
  double eps{0.0};
  double dt{0.02};
  Aggregation aggregation{Aggregation::Mean};
  double quantile{0.25};
};

ShrinkagePrediction predict_rollout(
  const ModelSpec & model, const Policy & candidate, const Vec & x_k, double t_k, double horizon,
  const ParameterBox & box, const DirectionSet & dirs, const RolloutPredictorConfig & cfg, uint64_t seed);

struct StackedRegressor
{
  Eigen::MatrixXd A;
};

StackedRegressor stack_regressor(const ModelSpec & model, const Trajectory & planned, int sample_stride);

ShrinkagePrediction predict_consistency(
  const StackedRegressor & stacked, double wbar, const ParameterBox & box, const DirectionSet & dirs);

// Support function of {e : ||A e||_inf <= 2 wbar} along d; +inf when unbounded.
double error_set_support(const Eigen::MatrixXd & A, double wbar, const Vec & d);

}  // namespace dualgk
