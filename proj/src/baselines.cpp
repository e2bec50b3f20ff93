#include "mlmc/baselines.hpp"

#include <cmath>
#include <limits>

#include "mlmc/error.hpp"
#include "mlmc/problems.hpp"

namespace mlmc {

namespace {

class Tableau {
 public:
  Tableau(Matrix rows, std::vector<int> basis) : t_(std::move(rows)), basis_(std::move(basis)) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int columns() const { return static_cast<int>(t_.cols()) - 1; }
  Matrix& table() { return t_; }
  std::vector<int>& basis() { return basis_; }

  // Objective row holds reduced costs; value lives in the bottom-right cell (negated).
  void set_objective(const Vector& cost) {
    const int m = rows();
    t_.row(m).setZero();
    t_.row(m).head(cost.size()) = cost.transpose();
    for (int i = 0; i < m; ++i) {
      const double cb = basis_[i] < cost.size() ? cost(basis_[i]) : 0.0;
      if (cb != 0.0) t_.row(m) -= cb * t_.row(i);
    }
  }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[r] = c;
    ++pivots_;
  }

  // Bland's rule over columns [0, allowed). Returns false when unbounded.
  bool optimize(int allowed, double tol) {
    const int m = rows();
    const int rhs = columns();
    for (;;) {
      int enter = -1;
      for (int j = 0; j < allowed; ++j) {
        if (t_(m, j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (t_(i, enter) > tol) {
          const double ratio = t_(i, rhs) / t_(i, enter);
          if (ratio < best - tol || (ratio <= best + tol && leave >= 0 && basis_[i] < basis_[leave])) {
            best = std::min(best, ratio);
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  std::int64_t pivots() const { return pivots_; }

 private:
  Matrix t_;
  std::vector<int> basis_;
  std::int64_t pivots_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem, double tol) {
  const int m = static_cast<int>(problem.A.rows());
  const int n = static_cast<int>(problem.A.cols());
  require(problem.c.size() == n && problem.b.size() == m && static_cast<int>(problem.relations.size()) == m,
          "LP dimensions do not match");
  require(problem.A.allFinite() && problem.b.allFinite() && problem.c.allFinite(), "LP data must be finite");

  Matrix A = problem.A;
  Vector b = problem.b;
  std::vector<LpRelation> rel = problem.relations;
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      A.row(i) *= -1.0;
      b(i) = -b(i);
      if (rel[i] == LpRelation::LessEqual) {
        rel[i] = LpRelation::GreaterEqual;
      } else if (rel[i] == LpRelation::GreaterEqual) {
        rel[i] = LpRelation::LessEqual;
      }
    }
  }
  int slacks = 0;
  int artificials = 0;
  for (LpRelation r : rel) {
    if (r != LpRelation::Equal) ++slacks;
    if (r != LpRelation::LessEqual) ++artificials;
  }
  const int structural = n + slacks;
  const int total = structural + artificials;
  Matrix t = Matrix::Zero(m + 1, total + 1);
  std::vector<int> basis(m);
  int s = n;
  int a = structural;
  for (int i = 0; i < m; ++i) {
    t.row(i).head(n) = A.row(i);
    t(i, total) = b(i);
    if (rel[i] == LpRelation::LessEqual) {
      t(i, s) = 1.0;
      basis[i] = s++;
    } else {
      if (rel[i] == LpRelation::GreaterEqual) t(i, s++) = -1.0;
      t(i, a) = 1.0;
      basis[i] = a++;
    }
  }
  Tableau tab(std::move(t), std::move(basis));

  LpSolution out;
  if (artificials > 0) {
    Vector phase1 = Vector::Zero(total);
    phase1.tail(artificials).setOnes();
    tab.set_objective(phase1);
    tab.optimize(total, tol);
    if (-tab.table()(m, total) > 1e-8 * (1.0 + b.lpNorm<Eigen::Infinity>())) {
      out.status = LpStatus::Infeasible;
      out.pivots = tab.pivots();
      return out;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] < structural) continue;
      for (int j = 0; j < structural; ++j) {
        if (std::abs(tab.table()(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }
  Vector cost = Vector::Zero(total);
  cost.head(n) = problem.c;
  tab.set_objective(cost);
  if (!tab.optimize(structural, tol)) {
    out.status = LpStatus::Unbounded;
    out.pivots = tab.pivots();
    return out;
  }
  out.status = LpStatus::Optimal;
  out.x = Vector::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (tab.basis()[i] < n) out.x(tab.basis()[i]) = tab.table()(i, total);
  }
  out.value = problem.c.dot(out.x);
  out.pivots = tab.pivots();
  return out;
}

MinMaxLpSolution minmax_affine_box_lp(const Matrix& A, const Vector& b, const Vector& lower, const Vector& upper) {
  const int N = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  require(b.size() == N && lower.size() == d && upper.size() == d, "dimension mismatch");
  require((upper.array() >= lower.array()).all(), "box bounds are inverted");
  // x = lower + z with 0 <= z <= upper - lower, t = tp - tm.
  LpProblem lp;
  lp.c = Vector::Zero(d + 2);
  lp.c(d) = 1.0;
  lp.c(d + 1) = -1.0;
  lp.A = Matrix::Zero(N + d, d + 2);
  lp.b = Vector::Zero(N + d);
  for (int i = 0; i < N; ++i) {
    lp.A.row(i).head(d) = A.row(i);
    lp.A(i, d) = -1.0;
    lp.A(i, d + 1) = 1.0;
    lp.b(i) = -b(i) - A.row(i).dot(lower);
    lp.relations.push_back(LpRelation::LessEqual);
  }
  for (int k = 0; k < d; ++k) {
    lp.A(N + k, k) = 1.0;
    lp.b(N + k) = upper(k) - lower(k);
    lp.relations.push_back(LpRelation::LessEqual);
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) throw NumericFailure("min-max LP did not reach an optimum");
  MinMaxLpSolution out;
  out.x = lower + sol.x.head(d);
  out.value = ((A * out.x) + b).maxCoeff();
  return out;
}

MinMaxLpSolution l1_regression_simplex_lp(const Matrix& A, const Vector& b, double total) {
  const int n = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  require(b.size() == n && total > 0.0, "invalid regression LP data");
  // Variables x (d) and residual bounds s (n).
  LpProblem lp;
  lp.c = Vector::Zero(d + n);
  lp.c.tail(n).setConstant(1.0 / n);
  lp.A = Matrix::Zero(2 * n + 1, d + n);
  lp.b = Vector::Zero(2 * n + 1);
  for (int i = 0; i < n; ++i) {
    lp.A.row(2 * i).head(d) = A.row(i);
    lp.A(2 * i, d + i) = -1.0;
    lp.b(2 * i) = b(i);
    lp.relations.push_back(LpRelation::LessEqual);
    lp.A.row(2 * i + 1).head(d) = -A.row(i);
    lp.A(2 * i + 1, d + i) = -1.0;
    lp.b(2 * i + 1) = -b(i);
    lp.relations.push_back(LpRelation::LessEqual);
  }
  lp.A.row(2 * n).head(d).setOnes();
  lp.b(2 * n) = total;
  lp.relations.push_back(LpRelation::Equal);
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) throw NumericFailure("regression LP did not reach an optimum");
  MinMaxLpSolution out;
  out.x = sol.x.head(d);
  project_onto_simplex(out.x, total);
  out.value = (A * out.x - b).lpNorm<1>() / n;
  return out;
}

FistaResult fista_lasso(const Matrix& A, const Vector& b, double tau, double tol, std::int64_t max_iterations) {
  require(A.rows() == b.size() && tau >= 0.0, "invalid lasso data");
  const Matrix gram = A.transpose() * A;
  const Vector atb = A.transpose() * b;
  const double L = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  require(L > 0.0, "lasso design matrix is zero");
  const auto objective = [&](const Vector& x) { return 0.5 * (A * x - b).squaredNorm() + tau * x.lpNorm<1>(); };
  const auto step = [&](const Vector& y) {
    const Vector z = y - (gram * y - atb) / L;
    Vector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = soft_threshold(z(i), tau / L);
    return out;
  };
  Vector x = Vector::Zero(A.cols());
  Vector y = x;
  double t = 1.0;
  FistaResult result;
  for (std::int64_t k = 0; k < max_iterations; ++k) {
    const Vector next = step(y);
    const Vector moved = next - x;
    // Gradient-based restart keeps the method monotone near the optimum.
    if ((y - next).dot(moved) > 0.0) {
      t = 1.0;
      y = x;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * moved;
    x = next;
    t = t_next;
    result.iterations = k + 1;
    if (moved.norm() <= tol * (1.0 + x.norm())) break;
  }
  result.x = x;
  result.value = objective(x);
  return result;
}

GridMinimum grid_minimize(const std::function<double(double)>& f, double lo, double hi, double step) {
  require(hi >= lo && step > 0.0, "invalid grid");
  const std::int64_t count = static_cast<std::int64_t>(std::floor((hi - lo) / step));
  GridMinimum best{lo, f(lo)};
  for (std::int64_t i = 1; i <= count + 1; ++i) {
    const double x = i <= count ? lo + static_cast<double>(i) * step : hi;
    const double value = f(x);
    if (value < best.value) best = {x, value};
  }
  return best;
}

}  // namespace mlmc
