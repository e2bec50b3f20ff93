#include "mlmc/composite.hpp"

#include "mlmc/error.hpp"

namespace mlmc {

CompositeProblem l1_least_squares_problem(const Matrix& A, const Vector& b, double tau, ConvexDomain domain,
                                          double R) {
  require(A.rows() == b.size() && A.rows() >= 1 && A.cols() >= 1, "least-squares data size mismatch");
  require(tau > 0.0 && R > 0.0, "tau and R must be positive");
  const int d = static_cast<int>(A.cols());
  const Matrix gram = A.transpose() * A;
  const double L = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  auto data = std::make_shared<const std::pair<Matrix, Vector>>(A, b);
  const double scale = tau * d;
  auto sampler = [scale, d](const Vector& x, Rng& rng, Vector& out) {
    out.setZero();
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d)));
    out(j) = x(j) > 0.0 ? scale : (x(j) < 0.0 ? -scale : 0.0);
  };
  return CompositeProblem{
      [data](const Vector& x) { return 0.5 * (data->first * x - data->second).squaredNorm(); },
      [data](const Vector& x) { return Vector(data->first.transpose() * (data->first * x - data->second)); },
      L,
      StochasticGradientOracle(d, scale, sampler),
      [tau](const Vector& x) { return tau * x.lpNorm<1>(); },
      std::move(domain),
      R,
      make_counter()};
}

CagdSchedule cagd_schedule(double L, double R, double epsilon) {
  require(L > 0.0, "smoothness L must be positive");
  require(R > 0.0 && epsilon > 0.0, "R and epsilon must be positive");
  return CagdSchedule{L, R, ceil_count(2.0 * std::sqrt(L * R * R / epsilon))};
}

CagdSchedule cagd_schedule_for_iterations(double L, double R, std::int64_t N) {
  require(L > 0.0, "smoothness L must be positive");
  require(R > 0.0 && N >= 1, "R and N must be positive");
  return CagdSchedule{L, R, N};
}

CompositeResult composite_agd(const CompositeProblem& problem, const Vector& x0, const CagdSchedule& schedule, Rng& rng,
                              const CompositeOptions& options) {
  require(problem.L > 0.0, "smoothness L must be positive");
  require(schedule.N >= 1, "iteration count must be positive");
  require(x0.size() == problem.domain.dimension() && x0.allFinite(), "x0 must be finite");
  const StochasticGradientOracle& f = problem.f;
  const std::int64_t f_before = f.queries();
  const std::int64_t grad_before = problem.gradient_counter->count();
  const ConvexDomain local = ConvexDomain::intersect_ball(x0, schedule.R, problem.domain);
  const double G = f.lipschitz_bound();
  CagdStep step;
  step.x = x0;
  step.v = x0;
  for (std::int64_t k = 1; k <= schedule.N; ++k) {
    const double gamma = schedule.gamma(k);
    const double beta = schedule.beta(k);
    step.k = k;
    step.v_prev = step.v;
    step.y = (1.0 - gamma) * step.x + gamma * problem.domain.project(step.v_prev);
    step.smooth_gradient = problem.gradient(step.y);
    const SimpleRegularizer psi(beta, step.v_prev, step.smooth_gradient);
    const CompositeObjective prox_objective{f, psi, problem.domain, beta};
    step.v_bar = epoch_sgd(prox_objective, ceil_count(16.0 * G * G / (beta * schedule.eps(k))), rng, options.sgd);
    const CompositeObjective estimate_objective{f, psi, local, beta};
    step.v = opt_est(estimate_objective, schedule.delta(), schedule.sigma2(), rng, options.estimator).point;
    step.x = (1.0 - gamma) * step.x + gamma * step.v_bar;
    if (options.observer) options.observer(step);
  }
  return CompositeResult{step.x, problem.gradient_counter->count() - grad_before, f.queries() - f_before};
}

CompositeResult composite_agd(const CompositeProblem& problem, const Vector& x0, double epsilon, Rng& rng,
                              const CompositeOptions& options) {
  return composite_agd(problem, x0, cagd_schedule(problem.L, problem.R, epsilon), rng, options);
}

}  // namespace mlmc
