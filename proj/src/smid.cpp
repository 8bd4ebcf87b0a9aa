#include "dualgk/smid.hpp"

#include "dualgk/linprog.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace dualgk
{

ParameterBox::ParameterBox(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_))
{
  require(lo.size() == hi.size(), "ParameterBox: dimension mismatch");
  require((lo.array() <= hi.array()).all(), "ParameterBox: lo must not exceed hi");
}

bool ParameterBox::contains(const Vec & theta, double tol) const
{
  return ((theta.array() >= lo.array() - tol) && (theta.array() <= hi.array() + tol)).all();
}

bool ParameterBox::contains(const ParameterBox & inner, double tol) const
{
  return ((inner.lo.array() >= lo.array() - tol) && (inner.hi.array() <= hi.array() + tol)).all();
}

Vec ParameterBox::sample(Rng & rng) const
{
  Vec theta(dim());
  for (int i = 0; i < dim(); ++i) {
    std::uniform_real_distribution<double> u(lo(i), hi(i));
    theta(i) = lo(i) == hi(i) ? lo(i) : u(rng);
  }
  return theta;
}

std::vector<Vec> ParameterBox::vertices() const
{
  std::vector<Vec> out;
  const int p = dim();
  for (int mask = 0; mask < (1 << p); ++mask) {
    Vec v(p);
    for (int i = 0; i < p; ++i) {
      v(i) = (mask >> i) & 1 ? hi(i) : lo(i);
    }
    out.push_back(v);
  }
  return out;
}

DirectionSet DirectionSet::axes(int p)
{
  DirectionSet s;
  for (int i = 0; i < p; ++i) {
    Vec e = Vec::Zero(p);
    e(i) = 1.0;
    s.dirs.push_back(e);
  }
  return s;
}

Mat gram_matrix(const std::vector<RegressionTuple> & tuples, int p)
{
  Mat G = Mat::Zero(p, p);
  for (const auto & t : tuples) {
    G.noalias() += t.F.transpose() * t.F;
  }
  return G;
}

double min_eigenvalue(const Mat & gram)
{
  if (gram.rows() == 0) {
    return 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace
{

bool same_tuple(const RegressionTuple & a, const RegressionTuple & b)
{
  double sf = 1e-12 * (1.0 + a.F.cwiseAbs().maxCoeff());
  double sy = 1e-12 * (1.0 + a.Y.cwiseAbs().maxCoeff());
  return (a.F - b.F).cwiseAbs().maxCoeff() <= sf && (a.Y - b.Y).cwiseAbs().maxCoeff() <= sy;
}

}  // namespace

bool try_admit(HistoryStack & stack, const RegressionTuple & tuple)
{
  if (!tuple.Y.allFinite() || !tuple.F.allFinite()) {
    return false;
  }
  for (const auto & t : stack.tuples) {
    if (same_tuple(t, tuple)) {
      return false;
    }
  }
  const int p = static_cast<int>(tuple.F.cols());
  if (stack.tuples.size() < stack.min_fill) {
    stack.tuples.push_back(tuple);
    return true;
  }
  Mat G = gram_matrix(stack.tuples, p);
  double base = min_eigenvalue(G);
  Mat add = tuple.F.transpose() * tuple.F;
  if (stack.tuples.size() < stack.capacity) {
    if (min_eigenvalue(G + add) >= base + stack.admission_threshold) {
      stack.tuples.push_back(tuple);
      return true;
    }
    return false;
  }
  // Full: swap out the tuple whose removal costs the least excitation.
  std::size_t victim = 0;
  double best_after_removal = -1e300;
  for (std::size_t j = 0; j < stack.tuples.size(); ++j) {
    const Mat & Fj = stack.tuples[j].F;
    double lam = min_eigenvalue(G - Fj.transpose() * Fj);
    if (lam > best_after_removal) {
      best_after_removal = lam;
      victim = j;
    }
  }
  const Mat & Fv = stack.tuples[victim].F;
  if (min_eigenvalue(G - Fv.transpose() * Fv + add) >= base + stack.admission_threshold) {
    stack.tuples[victim] = tuple;
    return true;
  }
  return false;
}

bool check_fe(const HistoryStack & stack, double lambda_fe)
{
  require(lambda_fe > 0.0, "check_fe: threshold must be positive");
  if (stack.tuples.empty()) {
    return false;
  }
  const int p = static_cast<int>(stack.tuples.front().F.cols());
  return min_eigenvalue(gram_matrix(stack.tuples, p)) >= lambda_fe;
}

SmidOutcome smid_refine(const ParameterBox & box, const std::vector<RegressionTuple> & tuples, double eps)
{
  require(eps > 0.0, "smid_update: eps must be positive");
  const int p = box.dim();
  SmidOutcome out{box, true};

  // Keep rows that depend on theta; rows with a zero regressor only need |Y| <= eps.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> ys;
  for (const auto & t : tuples) {
    require(t.F.cols() == p, "smid_update: parameter dimension mismatch");
    for (Eigen::Index r = 0; r < t.F.rows(); ++r) {
      Eigen::VectorXd f = t.F.row(r).transpose();
      if (f.cwiseAbs().maxCoeff() <= 1e-14) {
        if (std::abs(t.Y(r)) > eps) {
          out.consistent = false;
        }
        continue;
      }
      rows.push_back(f);
      ys.push_back(t.Y(r));
    }
  }
  if (!out.consistent) {
    spdlog::warn("smid_update: data inconsistent with eps={} (theta-free rows), keeping box", eps);
    return out;
  }
  if (rows.empty()) {
    return out;
  }

  // Primal: min s'theta, G theta <= h with G = [F; -F; I; -I].
  // Solved through its dual: min h'y s.t. G'y = -s, y >= 0 (p equality rows).
  const int K = static_cast<int>(rows.size());
  const int ncol = 2 * K + 2 * p;
  LinearProgram lp;
  lp.A_eq = Eigen::MatrixXd::Zero(p, ncol);
  lp.c = Eigen::VectorXd(ncol);
  for (int k = 0; k < K; ++k) {
    lp.A_eq.col(k) = rows[k];
    lp.A_eq.col(K + k) = -rows[k];
    lp.c(k) = ys[k] + eps;
    lp.c(K + k) = eps - ys[k];
  }
  for (int i = 0; i < p; ++i) {
    lp.A_eq(i, 2 * K + i) = 1.0;
    lp.A_eq(i, 2 * K + p + i) = -1.0;
    lp.c(2 * K + i) = box.hi(i);
    lp.c(2 * K + p + i) = -box.lo(i);
  }

  ParameterBox next = box;
  for (int i = 0; i < p; ++i) {
    for (int sense : {+1, -1}) {
      lp.b_eq = Eigen::VectorXd::Zero(p);
      lp.b_eq(i) = -static_cast<double>(sense);
      LpResult r = solve_lp(lp);
      if (r.status == LpStatus::Unbounded) {
        spdlog::warn("smid_update: constraint system infeasible with eps={}, keeping box", eps);
        out.consistent = false;
        return out;
      }
      if (r.status != LpStatus::Optimal) {
        spdlog::warn("smid_update: unexpected LP status {}, keeping box", to_string(r.status));
        out.consistent = false;
        return out;
      }
      // Primal optimum of min sense*theta_i equals -(dual optimum).
      // A tiny outward relaxation keeps round-off from cutting off the feasible set.
      double bound = -r.value * sense;
      if (sense > 0) {
        next.lo(i) = std::max(box.lo(i), bound - 1e-10);
      } else {
        next.hi(i) = std::min(box.hi(i), bound + 1e-10);
      }
    }
    if (next.lo(i) > next.hi(i)) {
      // Only reachable through round-off on a degenerate set.
      double mid = 0.5 * (next.lo(i) + next.hi(i));
      next.lo(i) = next.hi(i) = mid;
    }
  }
  out.box = next;
  return out;
}

ParameterBox smid_update(const ParameterBox & box, const HistoryStack & stack, double eps)
{
  return smid_refine(box, stack.tuples, eps).box;
}

double width(const ParameterBox & box, const Vec & d)
{
  require(std::abs(d.norm() - 1.0) < 1e-9, "width: direction must be unit length");
  return d.cwiseAbs().dot(box.hi - box.lo);
}

double avg_width(const ParameterBox & box, const DirectionSet & dirs)
{
  double s = 0.0;
  for (const auto & d : dirs.dirs) {
    s += width(box, d);
  }
  return dirs.dirs.empty() ? 0.0 : s / static_cast<double>(dirs.dirs.size());
}

double avg_width_reduction(const ParameterBox & before, const ParameterBox & after, const DirectionSet & dirs)
{
  require(before.contains(after, 1e-12), "avg_width_reduction: after must be nested in before");
  return std::max(0.0, avg_width(before, dirs) - avg_width(after, dirs));
}

}  // namespace dualgk
