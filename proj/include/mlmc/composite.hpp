#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "mlmc/estimators.hpp"

namespace mlmc {

// Psi = Lambda + f with Lambda L-smooth (exact gradients, counted) and f
// accessed through a stochastic subgradient oracle.
struct CompositeProblem {
  std::function<double(const Vector&)> smooth_value;
  std::function<Vector(const Vector&)> smooth_gradient;
  double L = 0.0;
  StochasticGradientOracle f;
  std::function<double(const Vector&)> f_value;
  ConvexDomain domain;
  double R = 0.0;
  std::shared_ptr<QueryCounter> gradient_counter = make_counter();

  Vector gradient(const Vector& x) const {
    gradient_counter->add(1);
    return smooth_gradient(x);
  }
  double objective(const Vector& x) const { return smooth_value(x) + f_value(x); }
};

// Lambda = (1/2)||Ax - b||^2, f = tau ||x||_1 with a coordinate-sampling
// oracle tau d sign(x_j) e_j (so G = tau d), L = lambda_max(A^T A).
CompositeProblem l1_least_squares_problem(const Matrix& A, const Vector& b, double tau, ConvexDomain domain,
                                          double R);

struct CagdSchedule {
  double L = 0.0;
  double R = 0.0;
  std::int64_t N = 0;

  double beta(std::int64_t k) const { return 2.0 * L / static_cast<double>(k); }
  double gamma(std::int64_t k) const { return 2.0 / static_cast<double>(k + 1); }
  double Gamma(std::int64_t k) const { return 2.0 / (static_cast<double>(k) * static_cast<double>(k + 1)); }
  double eps(std::int64_t k) const { return L * R * R / (2.0 * static_cast<double>(k) * static_cast<double>(N)); }
  double delta() const { return R / (16.0 * static_cast<double>(N)); }
  double sigma2() const { return R * R / (4.0 * static_cast<double>(N)); }
};

// N = ceil(2 sqrt(L R^2 / eps)).
CagdSchedule cagd_schedule(double L, double R, double epsilon);
CagdSchedule cagd_schedule_for_iterations(double L, double R, std::int64_t N);

struct CagdStep {
  std::int64_t k = 0;
  Vector y;
  Vector smooth_gradient;
  Vector v_prev;
  Vector v_bar;
  Vector v;
  Vector x;
};

struct CompositeResult {
  Vector x;
  std::int64_t gradient_evaluations = 0;
  std::int64_t f_queries = 0;
};

struct CompositeOptions {
  OptEstOptions estimator;
  EpochSgdConfig sgd;
  std::function<void(const CagdStep&)> observer;
};

CompositeResult composite_agd(const CompositeProblem& problem, const Vector& x0, const CagdSchedule& schedule, Rng& rng,
                              const CompositeOptions& options = {});
CompositeResult composite_agd(const CompositeProblem& problem, const Vector& x0, double epsilon, Rng& rng,
                              const CompositeOptions& options = {});

}  // namespace mlmc
