#pragma once

#include "dualgk/models.hpp"

#include <vector>

namespace dualgk
{

struct ParameterBox
{
  Vec lo;
  Vec hi;

  ParameterBox() = default;
  ParameterBox(Vec lo_, Vec hi_);

  int dim() const { return static_cast<int>(lo.size()); }
  Vec midpoint() const { return 0.5 * (lo + hi); }
  Vec project(const Vec & theta) const { return theta.cwiseMax(lo).cwiseMin(hi); }
  bool contains(const Vec & theta, double tol = 0.0) const;
  bool contains(const ParameterBox & inner, double tol = 0.0) const;
  Vec sample(Rng & rng) const;
  std::vector<Vec> vertices() const;
};

struct DirectionSet
{
  std::vector<Vec> dirs;

  static DirectionSet axes(int p);
};

struct HistoryStack
{
  std::vector<RegressionTuple> tuples;
  std::size_t capacity{50};
  double admission_threshold{1e-4};
  // Below this many tuples every non-duplicate tuple is admitted.
  std::size_t min_fill{1};
};

Mat gram_matrix(const std::vector<RegressionTuple> & tuples, int p);
double min_eigenvalue(const Mat & gram);

bool try_admit(HistoryStack & stack, const RegressionTuple & tuple);

bool check_fe(const HistoryStack & stack, double lambda_fe);

struct SmidOutcome
{
  ParameterBox box;
  bool consistent{true};
};

SmidOutcome smid_refine(const ParameterBox & box, const std::vector<RegressionTuple> & tuples, double eps);

ParameterBox smid_update(const ParameterBox & box, const HistoryStack & stack, double eps);

double width(const ParameterBox & box, const Vec & d);

double avg_width(const ParameterBox & box, const DirectionSet & dirs);

double avg_width_reduction(const ParameterBox & before, const ParameterBox & after, const DirectionSet & dirs);

}  // namespace dualgk
