#include <doctest.h>

#include <cmath>
#include <vector>

#include "mlmc/error.hpp"
#include "mlmc/minmax.hpp"

using namespace mlmc;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

MaxProblem small_affine(std::shared_ptr<QueryCounter> total = nullptr) {
  Matrix A(4, 2);
  A << 1.0, 0.0, -0.6, 0.8, 0.0, -1.0, -0.8, -0.6;
  return MaxProblem::affine(A, vec({0.05, -0.02, 0.0, 0.1}), std::move(total));
}

// Desk-scale constants that keep a run within seconds.
MinMaxConfig desk_config() {
  MinMaxConfig c;
  c.estimator_c = 1.0;
  c.sigma_scale = 1.0;
  c.delta_scale = 1.0;
  c.broo.inflate = false;
  return c;
}

}  // namespace

TEST_CASE("softmax examples") {
  const SoftmaxValue even = softmax_from_values(vec({0.0, 0.0}), 1.0);
  CHECK(even.value == doctest::Approx(std::log(2.0)));
  CHECK(even.probs(0) == doctest::Approx(0.5));
  const SoftmaxValue shifted = softmax_from_values(vec({1000.0, 0.0}), 1.0);
  CHECK(shifted.value == doctest::Approx(1000.0));
  CHECK(shifted.probs(0) == doctest::Approx(1.0));
  CHECK(std::isfinite(shifted.probs(1)));
  const SoftmaxValue three = softmax_from_values(vec({0.3, -0.1, 0.2}), 0.05);
  CHECK(three.value >= 0.3);
  CHECK(three.value <= 0.3 + 0.05 * std::log(3.0) + 1e-15);
  CHECK(three.probs.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(softmax_from_values(vec({1.0}), 1.0), InvalidInput);
  CHECK_THROWS_AS(smoothing_scale(0.1, 1), InvalidInput);
  CHECK(smoothing_scale(0.1, 4) == doctest::Approx(0.1 / (2.0 * std::log(4.0))));
}

TEST_CASE("rejection sampler accepts with probability 1/e at the anchor") {
  const MaxProblem p = small_affine();
  const Vector anchor = vec({0.1, -0.2});
  const SoftmaxContext ctx = make_softmax_context(p, anchor, 0.05);
  Rng rng(1);
  RejectionStats stats;
  Vector g(2);
  for (int k = 0; k < 100000; ++k) softmax_grad_est(ctx, p, anchor, rng, g, &stats);
  const double rate = static_cast<double>(stats.accepted) / static_cast<double>(stats.rounds);
  const double q = std::exp(-1.0);
  CHECK(std::abs(rate - q) <= 3.0 * std::sqrt(q * (1.0 - q) / static_cast<double>(stats.rounds)));
}

TEST_CASE("rejection sampler follows the softmax law inside the ball") {
  const MaxProblem p = small_affine();
  const Vector anchor = vec({0.0, 0.0});
  const double eps_prime = 0.08;
  const SoftmaxContext ctx = make_softmax_context(p, anchor, eps_prime);
  const Vector x = anchor + 0.7 * ctx.radius * vec({0.6, -0.8});
  const Vector target = softmax_from_values(p.values(x), eps_prime).probs;
  Rng rng(2);
  const int M = 100000;
  std::vector<int> counts(4, 0);
  Vector g(2);
  for (int k = 0; k < M; ++k) ++counts[softmax_grad_est(ctx, p, x, rng, g)];
  for (int i = 0; i < 4; ++i) {
    const double expected = M * target(i);
    CHECK(std::abs(counts[i] - expected) <= 4.0 * std::sqrt(expected * (1.0 - target(i))) + 1.0);
  }
}

TEST_CASE("query outside the anchor ball is a contract violation") {
  const MaxProblem p = small_affine();
  const SoftmaxContext ctx = make_softmax_context(p, Vector::Zero(2), 0.05);
  Rng rng(3);
  Vector g(2);
  CHECK_THROWS_AS(softmax_grad_est(ctx, p, vec({0.1, 0.0}), rng, g), ContractViolation);
}

TEST_CASE("value and gradient queries are counted apart") {
  const auto total = make_counter();
  const MaxProblem p = small_affine(total);
  const SoftmaxContext ctx = make_softmax_context(p, Vector::Zero(2), 0.05);
  CHECK(p.value_queries() == 4);
  CHECK(p.grad_queries() == 0);
  Rng rng(4);
  Vector g(2);
  RejectionStats stats;
  for (int k = 0; k < 100; ++k) softmax_grad_est(ctx, p, Vector::Zero(2), rng, g, &stats);
  CHECK(p.grad_queries() == 100);
  CHECK(p.value_queries() == 4 + stats.rounds);
  CHECK(total->count() == p.value_queries() + p.grad_queries());
  const double before = static_cast<double>(p.value_queries());
  CHECK(p.max_value_uncounted(vec({0.3, 0.3})) == doctest::Approx(0.35));
  CHECK(p.value_queries() == before);
}

TEST_CASE("bisection weight and step weight") {
  CHECK(bisection_alpha(0.0) == 0.0);
  CHECK(bisection_alpha(4.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(bisection_alpha(-1.0), InvalidInput);
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const double lambda = 0.01 + 10.0 * rng.uniform();
    const double A = 100.0 * rng.uniform();
    const double a = next_step_weight(lambda, A);
    CHECK(a > 0.0);
    CHECK(lambda * a * a == doctest::Approx(A + a).epsilon(1e-12));
  }
}

TEST_CASE("BROO budget scales with 1/rho^2") {
  BrooConfig plain;
  plain.inflate = false;
  CHECK(broo_budget(1.0, 1.0, 1.0, 0.1, plain) == 32);
  CHECK(broo_budget(1.0, 1.0, 0.5, 0.1, plain) == 128);
  CHECK(broo_budget(1.0, 2.0, 0.5, 0.1, plain) == 32);
  CHECK(broo_budget(1.0, 1.0, 1.0, 0.125) == 96);
  CHECK_THROWS_AS(broo_budget(1.0, 1.0, 1.0, 1.0), InvalidInput);
}

TEST_CASE("BROO lands near the ball-restricted minimizer") {
  const MaxProblem p = small_affine();
  const double eps_prime = 0.1;
  const double r = eps_prime / p.lipschitz_bound();
  const Vector center = vec({0.02, -0.03});
  const double lambda = 20.0;
  const double rho = r / 17.0;
  const ConvexDomain X = ConvexDomain::ball(Vector::Zero(2), 1.0);
  // Grid search over the disc for the smoothed subproblem.
  auto objective = [&](const Vector& x) {
    return softmax_from_values(vec({x(0) + 0.05, -0.6 * x(0) + 0.8 * x(1) - 0.02, -x(1), -0.8 * x(0) - 0.6 * x(1) + 0.1}),
                               eps_prime)
               .value +
           0.5 * lambda * (x - center).squaredNorm();
  };
  Vector best = center;
  const int steps = 400;
  for (int i = -steps; i <= steps; ++i) {
    for (int j = -steps; j <= steps; ++j) {
      const Vector x = center + r * vec({i, j}) / steps;
      if ((x - center).norm() > r) continue;
      if (objective(x) < objective(best)) best = x;
    }
  }
  Rng rng(6);
  int close = 0;
  const int runs = 20;
  for (int k = 0; k < runs; ++k) {
    const Vector out = broo(p, eps_prime, center, lambda, rho, r, X, 0.05, rng);
    CHECK((out - center).norm() <= r + 1e-12);
    if ((out - best).norm() <= rho + 2.0 * r / steps) ++close;
  }
  CHECK(close >= runs - 2);
  CHECK_THROWS_AS(broo(p, eps_prime, center, lambda, rho, 2.0 * r, X, 0.05, rng), InvalidInput);
}

TEST_CASE("bisection finds the movement band of an exact ball oracle") {
  // Linear f with slope g: the ball-restricted prox moves min(|g|/lambda, r).
  const Vector slope = vec({0.3, -0.4});
  const double r = 0.05;
  const BallOracle exact = [&](const Vector& y, double lambda, double, Rng&) {
    Vector step = -slope / lambda;
    if (step.norm() > r) step *= r / step.norm();
    return Vector(y + step);
  };
  const double G = 1.0, R = 1.0;
  const double lambda_max = 2.0 * G / r;
  Rng rng(7);
  const BisectionResult res =
      lambda_bisection(Vector::Zero(2), vec({0.1, 0.1}), 3.0, exact, 0.01, lambda_max, G, R, r, rng);
  const double movement = std::min(slope.norm() / res.lambda, r);
  CHECK(res.exit != BisectionResult::Exit::LowerBoundary);
  CHECK(movement >= 13.0 * r / 16.0 * (1.0 - 1e-12));
  CHECK(movement <= 15.0 * r / 16.0 * (1.0 + 1e-12));

  // Tiny slope: movement never reaches the band and the lower boundary exits.
  const BallOracle lazy = [&](const Vector& y, double lambda, double, Rng&) {
    return Vector(y + vec({1e-6, 0.0}) / lambda);
  };
  const BisectionResult low =
      lambda_bisection(Vector::Zero(2), vec({0.1, 0.1}), 3.0, lazy, 1.0, lambda_max, G, R, r, rng);
  CHECK(low.exit == BisectionResult::Exit::LowerBoundary);
  CHECK_THROWS_AS(lambda_bisection(Vector::Zero(2), Vector::Zero(2), 1.0, exact, 1.0, 10.0, G, R, r, rng),
                  InvalidInput);
}

TEST_CASE("accelerated proximal point with exact oracles") {
  // f(x) = (1/2)||x - c||^2, exact prox and Moreau gradient, fixed lambda.
  const Vector c = vec({0.3, -0.2});
  const ConvexDomain X = ConvexDomain::ball(Vector::Zero(2), 1.0);
  const NextLambda fixed = [](const Vector&, const Vector&, double, Rng&) { return 1.0; };
  const ApproxProx prox = [&](const Vector& y, double lambda, double, Rng&) {
    return Vector((c + lambda * y) / (1.0 + lambda));
  };
  const MoreauGradient grad = [&](const Vector& y, double lambda, double, double, Rng&) {
    return Vector(lambda * (y - (c + lambda * y) / (1.0 + lambda)));
  };
  ApmParams params;
  params.epsilon = 0.01;
  params.R = 1.0;
  params.A0 = 0.0;
  params.A_max = 100.0;
  params.K_max = 1000000;
  Rng rng(8);
  std::vector<ApmStep> steps;
  const ApmResult r =
      accel_prox(fixed, prox, grad, Vector::Zero(2), params, X, rng, [&](const ApmStep& s) { steps.push_back(s); });
  CHECK(r.reached_A_max);
  CHECK(r.A >= 100.0);
  REQUIRE(!steps.empty());
  CHECK(steps.back().A_prev < 100.0);
  for (const ApmStep& s : steps) {
    CHECK(s.A == doctest::Approx(s.A_prev + s.a));
    CHECK(s.lambda * s.a * s.a == doctest::Approx(s.A));
  }
  const double gap = 0.5 * (r.x - c).squaredNorm();
  CHECK(gap <= c.squaredNorm() / r.A);

  params.K_max = 3;
  const ApmResult capped = accel_prox(fixed, prox, grad, Vector::Zero(2), params, X, rng);
  CHECK(capped.iterations == 3);
  CHECK_FALSE(capped.reached_A_max);
  CHECK_THROWS_AS(accel_prox(fixed, prox, grad, vec({2.0, 0.0}), params, X, rng), InvalidInput);
}

TEST_CASE("schedule validation and shape") {
  CHECK_THROWS_AS(min_the_max_schedule(1, 1.0, 1.0, 0.05), InvalidInput);
  CHECK_THROWS_AS(min_the_max_schedule(4, 1.0, 1.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(min_the_max_schedule(4, 0.0, 1.0, 0.05), InvalidInput);
  const MinMaxSchedule s = min_the_max_schedule(20, 1.0, 1.0, 0.05);
  CHECK(s.eps_prime == doctest::Approx(0.05 / (2.0 * std::log(20.0))));
  CHECK(s.r == doctest::Approx(s.eps_prime));
  CHECK(s.lambda_max == doctest::Approx(2.0 / s.r));
  CHECK(s.lambda_min <= 0.25 * s.lambda_max);
  CHECK(s.K_max >= 1);
  CHECK(s.p_f == doctest::Approx(1.0 / (6.0 * s.K_max * s.bisection_calls)));
  CHECK(s.apm.A_max == doctest::Approx(9.0 / 0.025));
  CHECK(s.apm.A0 == doctest::Approx(1.0));
}

TEST_CASE("min-the-max on a one-dimensional absolute value") {
  Matrix A(2, 1);
  A << 1.0, -1.0;
  const MaxProblem p = MaxProblem::affine(A, vec({0.0, 0.0}));
  const ConvexDomain X = ConvexDomain::box(vec({-1.0}), vec({1.0}));
  const double eps = 0.3;
  int successes = 0;
  const int runs = 4;
  for (int k = 0; k < runs; ++k) {
    Rng rng = Rng(9).split(k);
    const std::int64_t before = p.total_counter()->count();
    const MinMaxResult r = min_the_max(p, X, vec({0.8}), 1.0, eps, rng, desk_config());
    CHECK(X.contains(r.x));
    CHECK(r.value_queries + r.grad_queries == p.total_counter()->count() - before);
    if (p.max_value_uncounted(r.x) <= eps) ++successes;
  }
  CHECK(successes >= runs / 2);
}
