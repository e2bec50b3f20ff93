#include <doctest.h>

#include <cmath>

#include "mlmc/baselines.hpp"
#include "mlmc/composite.hpp"
#include "mlmc/error.hpp"
#include "mlmc/problems.hpp"

using namespace mlmc;

namespace {

Matrix design(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix A(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal() / std::sqrt(static_cast<double>(n));
  }
  return A;
}

// Lambda = (1/2)||x - a||^2 (L = 1) and a linear f(x) = <u, x> with an exact oracle.
CompositeProblem linear_stub(const Vector& a, const Vector& u, double R) {
  const int d = static_cast<int>(a.size());
  StochasticGradientOracle oracle(
      d, u.norm(), [u](const Vector&, Rng&, Vector& out) { out = u; }, true);
  return CompositeProblem{[a](const Vector& x) { return 0.5 * (x - a).squaredNorm(); },
                          [a](const Vector& x) { return Vector(x - a); },
                          1.0,
                          oracle,
                          [u](const Vector& x) { return u.dot(x); },
                          ConvexDomain::ball(Vector::Zero(d), R),
                          R,
                          make_counter()};
}

}  // namespace

TEST_CASE("schedule examples and identities") {
  const CagdSchedule s = cagd_schedule(1.0, 1.0, 0.01);
  CHECK(s.N == 20);
  CHECK(s.delta() == doctest::Approx(1.0 / 320.0));
  CHECK(s.sigma2() == doctest::Approx(1.0 / 80.0));
  CHECK(s.gamma(1) == 1.0);
  CHECK(s.Gamma(1) == 1.0);
  for (std::int64_t k = 2; k <= 50; ++k) {
    CHECK(s.Gamma(k) == doctest::Approx(s.Gamma(k - 1) * (1.0 - s.gamma(k))));
    CHECK(s.beta(k) * s.gamma(k) == doctest::Approx(4.0 * s.L / (k * (k + 1.0))));
  }
  CHECK_THROWS_AS(cagd_schedule(0.0, 1.0, 0.01), InvalidInput);
  CHECK_THROWS_AS(cagd_schedule(-1.0, 1.0, 0.01), InvalidInput);
  CHECK_THROWS_AS(cagd_schedule_for_iterations(1.0, 1.0, 0), InvalidInput);
}

TEST_CASE("least-squares smooth part is L-smooth with the right gradient") {
  const Matrix A = design(15, 4, 1);
  Rng rng(2);
  Vector b(15);
  for (int i = 0; i < 15; ++i) b(i) = rng.normal();
  const CompositeProblem p = l1_least_squares_problem(A, b, 0.01, ConvexDomain::whole_space(4), 1.0);
  CHECK(p.L == doctest::Approx(Eigen::SelfAdjointEigenSolver<Matrix>(A.transpose() * A).eigenvalues().maxCoeff()));
  CHECK(p.f.lipschitz_bound() == doctest::Approx(0.04));
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(4), y(4);
    for (int i = 0; i < 4; ++i) {
      x(i) = rng.normal();
      y(i) = rng.normal();
    }
    const Vector g = p.smooth_gradient(x);
    for (int i = 0; i < 4; ++i) {
      Vector up = x, down = x;
      up(i) += 1e-6;
      down(i) -= 1e-6;
      CHECK((p.smooth_value(up) - p.smooth_value(down)) / 2e-6 == doctest::Approx(g(i)).epsilon(1e-5));
    }
    CHECK((p.smooth_gradient(x) - p.smooth_gradient(y)).norm() <= p.L * (x - y).norm() * (1.0 + 1e-12));
  }
  // Coordinate sampling is unbiased for tau * sign(x) and never exceeds G.
  const Vector x = (Vector(4) << 0.5, -0.2, 0.0, 1.0).finished();
  Vector sum = Vector::Zero(4);
  const int M = 200000;
  for (int k = 0; k < M; ++k) {
    const Vector g = p.f.sample(x, rng);
    CHECK(g.norm() <= p.f.lipschitz_bound() + 1e-15);
    sum += g;
  }
  const Vector mean = sum / M;
  const Vector expected = (Vector(4) << 0.01, -0.01, 0.0, 0.01).finished();
  // Per-coordinate draws are Bernoulli(1/4) times 0.04: SE = 0.04 sqrt(3/16 / M).
  for (int i = 0; i < 4; ++i) CHECK(std::abs(mean(i) - expected(i)) <= 3.0 * 0.04 * std::sqrt(3.0 / 16.0 / M) + 1e-15);
}

TEST_CASE("first iterate is the prox output and gradients are counted once per iteration") {
  const Vector a = (Vector(2) << 0.3, -0.1).finished();
  const Vector u = (Vector(2) << 0.05, 0.02).finished();
  const CompositeProblem p = linear_stub(a, u, 1.0);
  const CagdSchedule s = cagd_schedule_for_iterations(1.0, 1.0, 12);
  CompositeOptions options;
  LevelCache cache;
  options.estimator.cache = &cache;
  int seen = 0;
  options.observer = [&](const CagdStep& step) {
    ++seen;
    if (step.k == 1) CHECK((step.x - step.v_bar).norm() == 0.0);
  };
  Rng rng(3);
  const CompositeResult r = composite_agd(p, Vector::Zero(2), s, rng, options);
  CHECK(seen == 12);
  CHECK(r.gradient_evaluations == 12);
  CHECK(p.gradient_counter->count() == 12);
  CHECK(r.f_queries == p.f.queries());
}

TEST_CASE("linear f subproblem has a closed-form minimizer") {
  const Vector a = (Vector(2) << 1.5, 0.4).finished();
  const Vector u = (Vector(2) << 0.2, -0.3).finished();
  const CompositeProblem p = linear_stub(a, u, 1.0);
  const CagdSchedule s = cagd_schedule_for_iterations(1.0, 1.0, 4);
  const ConvexDomain ball = ConvexDomain::ball(Vector::Zero(2), 1.0);
  CompositeOptions options;
  LevelCache cache;
  options.estimator.cache = &cache;
  options.observer = [&](const CagdStep& step) {
    const double beta = s.beta(step.k);
    const Vector exact = ball.project(step.v_prev - (u + step.smooth_gradient) / beta);
    const double G = u.norm();
    const std::int64_t T = static_cast<std::int64_t>(std::ceil(16.0 * G * G / (beta * s.eps(step.k))));
    CAPTURE(step.k);
    CHECK((step.v_bar - exact).squaredNorm() <= 32.0 * G * G / (beta * beta * static_cast<double>(T)) + 1e-15);
    CHECK((step.v - exact).norm() <= s.delta() + std::sqrt(s.sigma2()));
  };
  Rng rng(4);
  composite_agd(p, Vector::Zero(2), s, rng, options);
}

TEST_CASE("input validation") {
  const Vector a = Vector::Zero(2);
  CompositeProblem p = linear_stub(a, Vector::Constant(2, 0.1), 1.0);
  Rng rng(5);
  CHECK_THROWS_AS(composite_agd(p, Vector::Zero(3), 0.1, rng), InvalidInput);
  p.L = 0.0;
  CHECK_THROWS_AS(composite_agd(p, Vector::Zero(2), cagd_schedule_for_iterations(1.0, 1.0, 3), rng), InvalidInput);
}

TEST_CASE("composite AGD reaches the accelerated rate on a small lasso") {
  const Matrix A = design(20, 6, 6);
  Rng rng(7);
  Vector b(20);
  for (int i = 0; i < 20; ++i) b(i) = rng.normal();
  const double tau = 2e-4;
  const FistaResult star = fista_lasso(A, b, tau);
  const double R = star.x.norm();
  const CompositeProblem p = l1_least_squares_problem(A, b, tau, ConvexDomain::whole_space(6), R);
  for (std::int64_t N : {10, 20}) {
    Rng run_rng = Rng(8).split(static_cast<std::uint64_t>(N));
    const CompositeResult r =
        composite_agd(p, Vector::Zero(6), cagd_schedule_for_iterations(p.L, R, N), run_rng);
    const double gap = p.objective(r.x) - star.value;
    CAPTURE(N);
    CHECK(gap >= -1e-9);
    CHECK(gap <= 8.0 * p.L * R * R / static_cast<double>(N * N));
  }
}
