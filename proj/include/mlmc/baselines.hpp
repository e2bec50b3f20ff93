#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mlmc/linalg.hpp"

namespace mlmc {

// Dense linear program  min c^T x  s.t. rows of A related to b, x >= 0.
// Two-phase tableau simplex with Bland's rule; meant for small reference
// instances, not for speed.
enum class LpRelation { LessEqual, Equal, GreaterEqual };
enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpProblem {
  Vector c;
  Matrix A;
  Vector b;
  std::vector<LpRelation> relations;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double value = 0.0;
  std::int64_t pivots = 0;
};

LpSolution solve_lp(const LpProblem& problem, double tol = 1e-10);

// min_x max_i <a_i, x> + b_i over the box [lower, upper].
struct MinMaxLpSolution {
  Vector x;
  double value = 0.0;
};
MinMaxLpSolution minmax_affine_box_lp(const Matrix& A, const Vector& b, const Vector& lower, const Vector& upper);

// min_x (1/n) sum_i |<a_i, x> - b_i| over the simplex {x >= 0, sum x = total}.
MinMaxLpSolution l1_regression_simplex_lp(const Matrix& A, const Vector& b, double total = 1.0);

// min_x (1/2)||Ax - b||^2 + tau ||x||_1 by FISTA with adaptive restart.
struct FistaResult {
  Vector x;
  double value = 0.0;
  std::int64_t iterations = 0;
};
FistaResult fista_lasso(const Matrix& A, const Vector& b, double tau, double tol = 1e-14,
                        std::int64_t max_iterations = 2'000'000);

// Smallest grid value of f on lo, lo + step, ..., hi (hi always included).
struct GridMinimum {
  double x = 0.0;
  double value = 0.0;
};
GridMinimum grid_minimize(const std::function<double(double)>& f, double lo, double hi, double step);

}  // namespace mlmc
