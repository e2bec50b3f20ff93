#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlmc/ellipsoid.hpp"
#include "mlmc/error.hpp"
#include "mlmc/problems.hpp"

using namespace mlmc;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

Vector gaussian(int d, Rng& rng, double scale = 1.0) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * rng.normal();
  return v;
}

std::vector<ConvexDomain> sample_domains() {
  return {ConvexDomain::ball(vec({0.5, -0.2, 0.1}), 1.3),
          ConvexDomain::box(vec({-1.0, 0.0, -0.5}), vec({0.5, 2.0, 0.5})),
          ConvexDomain::simplex(3, 2.0),
          ConvexDomain::intersect_ball(vec({0.4, 0.4, 0.4}), 0.5, ConvexDomain::simplex(3)),
          ConvexDomain::intersect_ball(vec({1.0, 0.0, 0.0}), 0.8,
                                       ConvexDomain::box(vec({-1.0, -1.0, -1.0}), vec({0.5, 0.5, 0.5})))};
}

// Exact minimizer of mean_i |a_i x - b_i| + (lam/2)(x - y)^2 in one dimension:
// on each interval between breakpoints the objective is quadratic.
double prox_1d_l1(const std::vector<double>& a, const std::vector<double>& b, double lam, double y) {
  std::vector<double> knots;
  for (std::size_t i = 0; i < a.size(); ++i) knots.push_back(b[i] / a[i]);
  std::sort(knots.begin(), knots.end());
  auto objective = [&](double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * x - b[i]);
    return s / static_cast<double>(a.size()) + 0.5 * lam * (x - y) * (x - y);
  };
  std::vector<double> candidates = knots;
  std::vector<double> edges = {-1e9};
  edges.insert(edges.end(), knots.begin(), knots.end());
  edges.push_back(1e9);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double mid = 0.5 * (std::max(edges[k], -1e6) + std::min(edges[k + 1], 1e6));
    double slope = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) slope += (a[i] * mid - b[i] > 0 ? a[i] : -a[i]);
    slope /= static_cast<double>(a.size());
    candidates.push_back(std::clamp(y - slope / lam, edges[k], edges[k + 1]));
  }
  double best = candidates.front();
  for (double c : candidates) {
    if (objective(c) < objective(best)) best = c;
  }
  return best;
}

}  // namespace

TEST_CASE("projection examples") {
  const ConvexDomain unit = ConvexDomain::ball(Vector::Zero(2), 1.0);
  CHECK((unit.project(vec({0.3, 0.4})) - vec({0.3, 0.4})).norm() == doctest::Approx(0.0));
  CHECK((unit.project(vec({3.0, 4.0})) - vec({0.6, 0.8})).norm() < 1e-15);
  CHECK((ConvexDomain::simplex(3).project(vec({1.0, 1.0, 1.0})) - Vector::Constant(3, 1.0 / 3.0)).norm() < 1e-15);
  CHECK_THROWS_AS(unit.project(vec({std::nan(""), 0.0})), InvalidInput);
  CHECK_THROWS_AS(unit.project(vec({INFINITY, 0.0})), InvalidInput);
}

TEST_CASE("projection is idempotent and nearest") {
  Rng rng(3);
  for (const ConvexDomain& domain : sample_domains()) {
    CAPTURE(domain.describe());
    std::vector<Vector> members;
    for (int k = 0; k < 200; ++k) members.push_back(domain.project(gaussian(3, rng, 2.0)));
    for (int k = 0; k < 200; ++k) {
      const Vector x = gaussian(3, rng, 2.0);
      const Vector p = domain.project(x);
      CHECK(domain.contains(p));
      CHECK((domain.project(p) - p).norm() <= 1e-9);
      const double dist = (p - x).norm();
      for (int s = 0; s < 20; ++s) CHECK(dist <= (members[(k * 20 + s) % 200] - x).norm() + 1e-9);
    }
  }
}

TEST_CASE("intersection projection handles the ball boundary") {
  const ConvexDomain d = ConvexDomain::intersect_ball(Vector::Zero(2), 1.0,
                                                      ConvexDomain::box(vec({0.5, -2.0}), vec({2.0, 2.0})));
  const Vector p = d.project(vec({3.0, 3.0}));
  CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p(0) >= 0.5 - 1e-12);
}

TEST_CASE("sample_subgradient on |x|") {
  const BenchmarkProblem p = soft_threshold_problem();
  Rng rng(1);
  CHECK(sample_subgradient(p.oracle, vec({2.0}), rng)(0) == 1.0);
  CHECK(sample_subgradient(p.oracle, vec({-0.5}), rng)(0) == -1.0);
  const std::int64_t before = p.oracle.queries();
  CHECK(sample_subgradient(p.oracle, vec({0.0}), rng)(0) == 0.0);
  CHECK(p.oracle.queries() == before + 1);
  CHECK_THROWS_AS(sample_subgradient(p.oracle, vec({std::nan("")}), rng), InvalidInput);
}

TEST_CASE("finite-sum oracle is unbiased and within its second moment") {
  const RegressionData data = make_regression_data(12, 4, 9);
  const BenchmarkProblem p =
      l1_regression_problem(data.A, data.b, SimpleRegularizer::zero(4), ConvexDomain::whole_space(4));
  const Vector x = vec({0.1, 0.5, -0.3, 0.2});
  const Vector full = p.subgradient(x);
  Rng rng(17);
  const int M = 100000;
  Vector sum = Vector::Zero(4), sum_sq = Vector::Zero(4);
  double norm_sum = 0.0, norm_sq = 0.0;
  for (int k = 0; k < M; ++k) {
    const Vector g = p.oracle.sample(x, rng);
    sum += g;
    sum_sq += g.cwiseProduct(g);
    norm_sum += g.squaredNorm();
    norm_sq += g.squaredNorm() * g.squaredNorm();
    if ((k + 1) % 10000 == 0) {
      const double m = k + 1.0;
      const double mean2 = norm_sum / m;
      const double se = std::sqrt(std::max(norm_sq / m - mean2 * mean2, 0.0) / m);
      CHECK(mean2 <= p.G() * p.G() + 3.0 * se);
    }
  }
  const Vector mean = sum / M;
  for (int i = 0; i < 4; ++i) {
    const double se = std::sqrt((sum_sq(i) / M - mean(i) * mean(i)) / M);
    CHECK(std::abs(mean(i) - full(i)) <= 3.0 * se + 1e-12);
  }
  CHECK(p.oracle.queries() == M);
}

TEST_CASE("exact prox examples") {
  const BenchmarkProblem abs = soft_threshold_problem();
  CHECK(exact_prox_reference(abs, 1.0, vec({2.0}))(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact_prox_reference(abs, 2.0, vec({0.3}))(0) == 0.0);
  CHECK_THROWS_AS(exact_prox_reference(abs, 0.0, vec({0.3})), InvalidInput);
  CHECK_THROWS_AS(exact_prox_reference(abs, -1.0, vec({0.3})), InvalidInput);

  const BenchmarkProblem quad =
      quadratic_problem(vec({2.0, 0.0}), 0.0, SimpleRegularizer::zero(2), ConvexDomain::whole_space(2), 1.0);
  CHECK((exact_prox_reference(quad, 1.0, vec({0.0, 0.0})) - vec({1.0, 0.0})).norm() < 1e-10);
}

TEST_CASE("fallback prox matches the piecewise-quadratic oracle") {
  const std::vector<double> a = {1.0, -0.5, 2.0, 0.8, 1.5};
  const std::vector<double> b = {0.3, 0.1, -0.4, 0.9, 0.2};
  Matrix A(5, 1);
  Vector bv(5);
  for (int i = 0; i < 5; ++i) {
    A(i, 0) = a[i];
    bv(i) = b[i];
  }
  const BenchmarkProblem p =
      l1_regression_problem(A, bv, SimpleRegularizer::zero(1), ConvexDomain::ball(Vector::Zero(1), 10.0));
  for (double lam : {0.5, 2.0, 10.0}) {
    for (double y : {-1.0, 0.05, 0.4, 2.0}) {
      const double expected = prox_1d_l1(a, b, lam, y);
      CHECK(std::abs(exact_prox_reference(p, lam, vec({y}))(0) - expected) <= 1e-8);
    }
  }
}

TEST_CASE("fallback prox in several dimensions is certified") {
  const RegressionData data = make_regression_data(20, 3, 4);
  const BenchmarkProblem p =
      l1_regression_problem(data.A, data.b, SimpleRegularizer::zero(3), ConvexDomain::whole_space(3));
  const double lam = 1.5;
  const Vector y = vec({0.2, -0.1, 0.4});
  const Vector x = exact_prox_reference(p, lam, y);
  // No point on a fine star around x does better than the certified minimizer.
  auto F = [&](const Vector& z) { return p.objective(z) + 0.5 * lam * (z - y).squaredNorm(); };
  Rng rng(5);
  for (int k = 0; k < 500; ++k) {
    const Vector z = x + gaussian(3, rng, 1e-3);
    CHECK(F(z) >= F(x) - 1e-12);
  }
}

TEST_CASE("Moreau gradient identity and envelope sandwich") {
  const BenchmarkProblem abs = soft_threshold_problem();
  const BenchmarkProblem quad = quadratic_problem(vec({0.5, -1.0}), 0.0, SimpleRegularizer::zero(2),
                                                  ConvexDomain::ball(Vector::Zero(2), 3.0));
  Rng rng(8);
  for (const BenchmarkProblem* p : {&abs, &quad}) {
    const int d = p->dimension();
    for (double lam : {0.5, 1.0, 4.0}) {
      for (int trial = 0; trial < 20; ++trial) {
        const Vector y = gaussian(d, rng, 1.5);
        const Vector grad = moreau_gradient(*p, lam, y);
        const double h = 1e-5;
        for (int i = 0; i < d; ++i) {
          Vector up = y, down = y;
          up(i) += h;
          down(i) -= h;
          const double fd = (moreau_envelope(*p, lam, up) - moreau_envelope(*p, lam, down)) / (2 * h);
          CHECK(std::abs(fd - grad(i)) <= 1e-5 * std::max(1.0, std::abs(grad(i))));
        }
        if (p == &abs) {
          const double f = p->objective(y);
          const double env = moreau_envelope(*p, lam, y);
          CHECK(env <= f + 1e-12);
          CHECK(f - p->G() * p->G() / (2 * lam) <= env + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("declared minimizers agree with a certified solve") {
  const BenchmarkProblem abs = soft_threshold_problem(2.0, 1.0);
  CHECK((*abs.exact_minimizer)(0) == 1.0);
  const BenchmarkProblem quad =
      quadratic_problem(vec({1.5, 0.5}), 0.1, SimpleRegularizer::quadratic(2.0, vec({0.0, 1.0})),
                        ConvexDomain::ball(Vector::Zero(2), 1.0));
  for (const BenchmarkProblem* p : {&abs, &quad}) {
    const int d = p->dimension();
    const FirstOrderOracle oracle = [p](const Vector& x) {
      return FirstOrderValue{p->total_objective(x), p->subgradient(x) + p->regularizer.gradient(x)};
    };
    const ConvexDomain box = p->domain.kind() == ConvexDomain::Kind::WholeSpace
                                 ? ConvexDomain::ball(Vector::Zero(d), 10.0)
                                 : p->domain;
    const Vector x = certified_minimize(oracle, box, Vector::Zero(d), 10.0, 1e-9);
    CHECK((x - *p->exact_minimizer).norm() <= 1e-8);
  }
}

TEST_CASE("piecewise quadratic family minimizer") {
  Matrix centers(2, 4);
  centers << 0.4, 1.6, 0.7, 1.3, 0.6, -0.5, 0.3, 0.0;
  const FiniteSumBenchmark bench =
      piecewise_quadratic_family(centers, 1.0, 0.5, vec({0.2, -0.1}), Vector::Zero(2), 3.0);
  CHECK((bench.minimizer - vec({0.5, -0.1})).norm() < 1e-15);
  const Vector x = certified_minimize(bench.family.full_oracle(), ConvexDomain::ball(bench.x0, bench.R), bench.x0,
                                      bench.R, 1e-10);
  CHECK((x - bench.minimizer).norm() <= 1e-9);
}

TEST_CASE("problem JSON round trip") {
  const RegressionData data = make_regression_data(6, 3, 2);
  const BenchmarkProblem p = l1_regression_problem(data.A, data.b, SimpleRegularizer::quadratic(0.5, vec({1, 0, 0})),
                                                   ConvexDomain::simplex(3));
  const BenchmarkProblem q = problem_from_json(problem_to_json(p));
  CHECK(q.kind == "l1_regression");
  CHECK(q.G() == p.G());
  CHECK(q.domain.kind() == ConvexDomain::Kind::Simplex);
  const Vector x = vec({0.2, 0.3, 0.5});
  CHECK(q.total_objective(x) == p.total_objective(x));

  const BenchmarkProblem s = problem_from_json(problem_to_json(soft_threshold_problem(3.0, 2.0)));
  CHECK((*s.exact_minimizer)(0) == 2.5);
  CHECK_THROWS_AS(problem_from_json(nlohmann::json{{"kind", "nope"}}), InvalidInput);
}
