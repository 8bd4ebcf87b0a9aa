#pragma once

// Independent reference computations used to freeze expected values in tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle
{

// Width along d of {e : |A e|_inf <= c} by enumerating vertices of the polytope.
// Returns +inf when the constraint matrix is rank deficient (unbounded set).
inline double polytope_width(const Eigen::MatrixXd & A, double c, const Eigen::VectorXd & d)
{
  const int M = static_cast<int>(A.rows());
  const int p = static_cast<int>(A.cols());
  Eigen::FullPivLU<Eigen::MatrixXd> rank_lu(A);
  if (rank_lu.rank() < p) {
    return std::numeric_limits<double>::infinity();
  }
  Eigen::MatrixXd H(2 * M, p);
  H << A, -A;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<int> pick(p);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == p) {
      Eigen::MatrixXd S(p, p);
      for (int k = 0; k < p; ++k) S.row(k) = H.row(pick[k]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
      if (lu.rank() < p) return;
      Eigen::VectorXd e = lu.solve(Eigen::VectorXd::Constant(p, c));
      if ((H * e).maxCoeff() > c * (1.0 + 1e-9) + 1e-12) return;
      double v = d.dot(e);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      return;
    }
    for (int i = start; i < 2 * M; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return hi - lo;
}

// Coordinate bounds of {x : H x <= h} by vertex enumeration (bounded polytopes).
struct VertexBounds
{
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  bool empty{true};
};

inline VertexBounds polytope_bounds(const Eigen::MatrixXd & H, const Eigen::VectorXd & h)
{
  const int K = static_cast<int>(H.rows());
  const int p = static_cast<int>(H.cols());
  VertexBounds out;
  out.lo = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  out.hi = -out.lo;
  std::vector<int> pick(p);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == p) {
      Eigen::MatrixXd S(p, p);
      Eigen::VectorXd b(p);
      for (int k = 0; k < p; ++k) {
        S.row(k) = H.row(pick[k]);
        b(k) = h(pick[k]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
      if (lu.rank() < p) return;
      Eigen::VectorXd x = lu.solve(b);
      if (((H * x - h).array() > 1e-10).any()) return;
      out.empty = false;
      out.lo = out.lo.cwiseMin(x);
      out.hi = out.hi.cwiseMax(x);
      return;
    }
    for (int i = start; i < K; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

// Bounds of {theta in box : |Y_j - F_j theta| <= eps} by dense grid scan (p <= 2).
struct GridBounds
{
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  bool empty{true};
};

inline GridBounds grid_scan(
  const std::vector<Eigen::MatrixXd> & F, const std::vector<Eigen::VectorXd> & Y, double eps,
  const Eigen::VectorXd & box_lo, const Eigen::VectorXd & box_hi, double step)
{
  const int p = static_cast<int>(box_lo.size());
  GridBounds out;
  out.lo = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  out.hi = -out.lo;
  std::vector<int> counts(p);
  for (int i = 0; i < p; ++i) counts[i] = static_cast<int>(std::floor((box_hi(i) - box_lo(i)) / step + 1e-9)) + 1;
  std::vector<int> idx(p, 0);
  Eigen::VectorXd th(p);
  for (;;) {
    for (int i = 0; i < p; ++i) th(i) = std::min(box_hi(i), box_lo(i) + idx[i] * step);
    bool ok = true;
    for (std::size_t j = 0; j < F.size() && ok; ++j) {
      for (Eigen::Index r = 0; r < F[j].rows() && ok; ++r) {
        double res = Y[j](r);
        for (int i = 0; i < p; ++i) res -= F[j](r, i) * th(i);
        ok = std::abs(res) <= eps;
      }
    }
    if (ok) {
      out.empty = false;
      out.lo = out.lo.cwiseMin(th);
      out.hi = out.hi.cwiseMax(th);
    }
    int k = 0;
    while (k < p && ++idx[k] >= counts[k]) idx[k++] = 0;
    if (k == p) break;
  }
  return out;
}

}  // namespace oracle
