#include "dualgk/linprog.hpp"

#include "dualgk/types.hpp"

#include <cmath>
#include <vector>

namespace dualgk
{

const char * to_string(LpStatus status)
{
  switch (status) {
    case LpStatus::Optimal:
      return "optimal";
    case LpStatus::Infeasible:
      return "infeasible";
    case LpStatus::Unbounded:
      return "unbounded";
  }
  return "unknown";
}

namespace
{

constexpr double kPivotTol = 1e-10;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class VarKind { Lower, Upper, Free };

struct VarMap
{
  VarKind kind;
  double offset;
  int col;
  int col_neg;
};

class Tableau
{
public:
  Tableau(int rows, int cols) : T_(RowMatrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  RowMatrix & data() { return T_; }
  int rows() const { return static_cast<int>(basis_.size()); }
  int cols() const { return static_cast<int>(T_.cols()) - 1; }
  std::vector<int> & basis() { return basis_; }
  double rhs(int i) const { return T_(i, cols()); }

  void pivot(int r, int c)
  {
    T_.row(r) /= T_(r, c);
    for (int i = 0; i < T_.rows(); ++i) {
      if (i != r) {
        double f = T_(i, c);
        if (f != 0.0) {
          T_.row(i) -= f * T_.row(r);
        }
      }
    }
    basis_[r] = c;
  }

  void set_objective(const Eigen::VectorXd & cost)
  {
    const int n = cols();
    T_.row(rows()).setZero();
    T_.row(rows()).head(n) = cost.transpose();
    for (int i = 0; i < rows(); ++i) {
      double cb = cost(basis_[i]);
      if (cb != 0.0) {
        T_.row(rows()) -= cb * T_.row(i);
      }
    }
  }

  // Bland's rule; returns false if unbounded.
  bool optimize(const std::vector<bool> & allowed, int & iterations)
  {
    const int m = rows();
    const int n = cols();
    for (;;) {
      int enter = -1;
      for (int j = 0; j < n; ++j) {
        if (allowed[j] && T_(m, j) < -1e-11) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        return true;
      }
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        double a = T_(i, enter);
        if (a > kPivotTol) {
          double ratio = T_(i, n) / a;
          if (leave < 0 || ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis_[i] < basis_[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) {
        return false;
      }
      pivot(leave, enter);
      if (++iterations > 200000) {
        throw std::runtime_error("simplex iteration limit exceeded");
      }
    }
  }

private:
  RowMatrix T_;
  std::vector<int> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram & lp)
{
  const int nx = static_cast<int>(lp.c.size());
  const int n_ub = static_cast<int>(lp.b_ub.size());
  const int n_eq = static_cast<int>(lp.b_eq.size());
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lo = lp.lo.size() ? lp.lo : Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd hi = lp.hi.size() ? lp.hi : Eigen::VectorXd::Constant(nx, inf);
  require(lo.size() == nx && hi.size() == nx, "solve_lp: bound dimension mismatch");
  require(n_ub == 0 || (lp.A_ub.rows() == n_ub && lp.A_ub.cols() == nx), "solve_lp: A_ub shape");
  require(n_eq == 0 || (lp.A_eq.rows() == n_eq && lp.A_eq.cols() == nx), "solve_lp: A_eq shape");

  LpResult res;
  for (int j = 0; j < nx; ++j) {
    if (lo(j) > hi(j)) {
      return res;
    }
  }

  // Substitute x = offset + sign * z (or z+ - z-), all z >= 0.
  std::vector<VarMap> vars(nx);
  int nz = 0;
  std::vector<int> bounded;
  for (int j = 0; j < nx; ++j) {
    if (std::isfinite(lo(j))) {
      vars[j] = {VarKind::Lower, lo(j), nz++, -1};
      if (std::isfinite(hi(j))) {
        bounded.push_back(j);
      }
    } else if (std::isfinite(hi(j))) {
      vars[j] = {VarKind::Upper, hi(j), nz++, -1};
    } else {
      vars[j] = {VarKind::Free, 0.0, nz, nz + 1};
      nz += 2;
    }
  }

  const int n_le = n_ub + static_cast<int>(bounded.size());
  const int m = n_le + n_eq;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, nz);
  Eigen::VectorXd b(m);
  Eigen::VectorXd cz = Eigen::VectorXd::Zero(nz);

  auto put_row = [&](int r, const Eigen::RowVectorXd & a, double rhs) {
    double shift = 0.0;
    for (int j = 0; j < nx; ++j) {
      double aj = a(j);
      if (aj == 0.0) {
        continue;
      }
      const VarMap & v = vars[j];
      shift += aj * v.offset;
      switch (v.kind) {
        case VarKind::Lower:
          A(r, v.col) += aj;
          break;
        case VarKind::Upper:
          A(r, v.col) -= aj;
          break;
        case VarKind::Free:
          A(r, v.col) += aj;
          A(r, v.col_neg) -= aj;
          break;
      }
    }
    b(r) = rhs - shift;
  };
  for (int i = 0; i < n_ub; ++i) {
    put_row(i, lp.A_ub.row(i), lp.b_ub(i));
  }
  for (std::size_t k = 0; k < bounded.size(); ++k) {
    int j = bounded[k];
    A(n_ub + static_cast<int>(k), vars[j].col) = 1.0;
    b(n_ub + static_cast<int>(k)) = hi(j) - lo(j);
  }
  for (int i = 0; i < n_eq; ++i) {
    put_row(n_le + i, lp.A_eq.row(i), lp.b_eq(i));
  }
  for (int j = 0; j < nx; ++j) {
    const VarMap & v = vars[j];
    switch (v.kind) {
      case VarKind::Lower:
        cz(v.col) += lp.c(j);
        break;
      case VarKind::Upper:
        cz(v.col) -= lp.c(j);
        break;
      case VarKind::Free:
        cz(v.col) += lp.c(j);
        cz(v.col_neg) -= lp.c(j);
        break;
    }
  }

  // Columns: z | slacks (n_le) | artificials (one per row needing one).
  std::vector<bool> negated(m, false);
  std::vector<int> art_of_row(m, -1);
  int n_art = 0;
  for (int i = 0; i < m; ++i) {
    negated[i] = b(i) < 0.0;
    if (i >= n_le || negated[i]) {
      art_of_row[i] = n_art++;
    }
  }
  const int col_slack = nz;
  const int col_art = nz + n_le;
  const int n_cols = nz + n_le + n_art;
  Tableau tab(m, n_cols);
  auto & T = tab.data();
  std::vector<int> init_col(m);
  for (int i = 0; i < m; ++i) {
    double sgn = negated[i] ? -1.0 : 1.0;
    T.row(i).head(nz) = sgn * A.row(i);
    if (i < n_le) {
      T(i, col_slack + i) = sgn;
    }
    T(i, n_cols) = sgn * b(i);
    if (art_of_row[i] >= 0) {
      int c = col_art + art_of_row[i];
      T(i, c) = 1.0;
      tab.basis()[i] = c;
    } else {
      tab.basis()[i] = col_slack + i;
    }
    init_col[i] = tab.basis()[i];
  }

  std::vector<bool> allowed(n_cols, true);
  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n_cols);
    phase1.tail(n_art).setOnes();
    tab.set_objective(phase1);
    tab.optimize(allowed, res.iterations);
    double infeas = -T(m, n_cols);
    double scale = 1.0 + b.cwiseAbs().maxCoeff();
    if (infeas > 1e-9 * scale) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] >= col_art) {
        for (int j = 0; j < col_art; ++j) {
          if (std::abs(T(i, j)) > 1e-9) {
            tab.pivot(i, j);
            break;
          }
        }
      }
    }
    for (int j = col_art; j < n_cols; ++j) {
      allowed[j] = false;
    }
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n_cols);
  phase2.head(nz) = cz;
  tab.set_objective(phase2);
  if (!tab.optimize(allowed, res.iterations)) {
    res.status = LpStatus::Unbounded;
    return res;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_cols);
  for (int i = 0; i < m; ++i) {
    z(tab.basis()[i]) = T(i, n_cols);
  }
  res.x.resize(nx);
  for (int j = 0; j < nx; ++j) {
    const VarMap & v = vars[j];
    switch (v.kind) {
      case VarKind::Lower:
        res.x(j) = v.offset + z(v.col);
        break;
      case VarKind::Upper:
        res.x(j) = v.offset - z(v.col);
        break;
      case VarKind::Free:
        res.x(j) = z(v.col) - z(v.col_neg);
        break;
    }
  }
  res.value = lp.c.dot(res.x);

  // Reduced cost of a row's initial basic column is -y for that (sign-adjusted) row.
  res.dual_ub = Eigen::VectorXd::Zero(n_ub);
  res.dual_eq = Eigen::VectorXd::Zero(n_eq);
  for (int i = 0; i < m; ++i) {
    double y = -T(m, init_col[i]);
    if (negated[i]) {
      y = -y;
    }
    if (i < n_ub) {
      res.dual_ub(i) = y;
    } else if (i >= n_le) {
      res.dual_eq(i - n_le) = y;
    }
  }
  res.status = LpStatus::Optimal;
  return res;
}

L1Preimage min_l1_preimage(const Eigen::MatrixXd & A, const Eigen::VectorXd & d)
{
  require(A.cols() == d.size(), "min_l1_preimage: dimension mismatch");
  require(d.cwiseAbs().maxCoeff() > 0.0, "min_l1_preimage: d must be nonzero");
  const Eigen::Index M = A.rows();
  LinearProgram lp;
  lp.c = Eigen::VectorXd::Ones(2 * M);
  lp.A_eq.resize(A.cols(), 2 * M);
  lp.A_eq << A.transpose(), -A.transpose();
  lp.b_eq = d;
  L1Preimage out;
  LpResult r = solve_lp(lp);
  if (r.status != LpStatus::Optimal) {
    return out;
  }
  out.feasible = true;
  out.lambda = r.x.head(M) - r.x.tail(M);
  out.l1 = r.value;
  return out;
}

}  // namespace dualgk
