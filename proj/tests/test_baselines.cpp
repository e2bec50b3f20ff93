#include <doctest.h>

#include <cmath>
#include <limits>

#include "mlmc/baselines.hpp"
#include "mlmc/error.hpp"
#include "mlmc/rng.hpp"

using namespace mlmc;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// Minimum of c^T x over {x >= 0, A x <= b} in two variables by enumerating
// every intersection of two boundary lines.
double vertex_enumeration(const Vector& c, const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows());
  Matrix lines(m + 2, 2);
  Vector rhs(m + 2);
  lines.topRows(m) = A;
  rhs.head(m) = b;
  lines.row(m) << -1.0, 0.0;
  lines.row(m + 1) << 0.0, -1.0;
  rhs(m) = rhs(m + 1) = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m + 2; ++i) {
    for (int j = i + 1; j < m + 2; ++j) {
      Eigen::Matrix2d M;
      M.row(0) = lines.row(i);
      M.row(1) = lines.row(j);
      if (std::abs(M.determinant()) < 1e-12) continue;
      const Eigen::Vector2d x = M.inverse() * Eigen::Vector2d(rhs(i), rhs(j));
      if (((lines * x - rhs).array() <= 1e-9).all()) best = std::min(best, c.dot(x));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("textbook LP") {
  LpProblem p{vec({-1.0, -1.0}), Matrix(2, 2), vec({4.0, 6.0}), {LpRelation::LessEqual, LpRelation::LessEqual}};
  p.A << 1.0, 2.0, 3.0, 1.0;
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.value == doctest::Approx(-2.8));
  CHECK(s.x(0) == doctest::Approx(1.6));
  CHECK(s.x(1) == doctest::Approx(1.2));
}

TEST_CASE("equality and greater-equal rows") {
  LpProblem p{vec({1.0, 1.0}), Matrix(2, 2), vec({2.0, 0.0}), {LpRelation::GreaterEqual, LpRelation::Equal}};
  p.A << 1.0, 1.0, 1.0, -1.0;
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.value == doctest::Approx(2.0));
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.x(1) == doctest::Approx(1.0));

  // Negative right-hand side gets flipped internally.
  LpProblem q{vec({1.0}), Matrix(1, 1), vec({-3.0}), {LpRelation::LessEqual}};
  q.A << -1.0;
  const LpSolution t = solve_lp(q);
  REQUIRE(t.status == LpStatus::Optimal);
  CHECK(t.value == doctest::Approx(3.0));
}

TEST_CASE("infeasible and unbounded programs") {
  LpProblem infeasible{vec({1.0}), Matrix(2, 1), vec({1.0, 2.0}), {LpRelation::LessEqual, LpRelation::GreaterEqual}};
  infeasible.A << 1.0, 1.0;
  CHECK(solve_lp(infeasible).status == LpStatus::Infeasible);

  LpProblem unbounded{vec({-1.0, 0.0}), Matrix(1, 2), vec({1.0}), {LpRelation::LessEqual}};
  unbounded.A << 1.0, -1.0;
  CHECK(solve_lp(unbounded).status == LpStatus::Unbounded);
}

TEST_CASE("simplex agrees with vertex enumeration") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(4));
    Matrix A(m, 2);
    Vector b(m);
    for (int i = 0; i < m; ++i) {
      A(i, 0) = rng.uniform() * 2.0 - 0.5;
      A(i, 1) = rng.uniform() * 2.0 - 0.5;
      b(i) = 0.5 + rng.uniform();
    }
    // Keep the region bounded.
    A.row(0) << 1.0, 1.0;
    const Vector c = vec({rng.normal(), rng.normal()});
    LpProblem p{c, A, b, std::vector<LpRelation>(m, LpRelation::LessEqual)};
    const LpSolution s = solve_lp(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CAPTURE(trial);
    CHECK(s.value == doctest::Approx(vertex_enumeration(c, A, b)).epsilon(1e-9));
    CHECK(((A * s.x - b).array() <= 1e-9).all());
    CHECK((s.x.array() >= -1e-12).all());
  }
}

TEST_CASE("min-max over a box matches a grid") {
  Matrix A(3, 2);
  A << 1.0, 0.5, -1.0, 0.2, 0.1, -1.0;
  const Vector b = vec({0.0, 0.1, -0.05});
  const Vector lo = vec({-1.0, -1.0}), hi = vec({1.0, 1.0});
  const MinMaxLpSolution s = minmax_affine_box_lp(A, b, lo, hi);
  CHECK(((s.x - lo).array() >= -1e-12).all());
  CHECK(((hi - s.x).array() >= -1e-12).all());
  CHECK(s.value == doctest::Approx((A * s.x + b).maxCoeff()).epsilon(1e-12));
  double grid = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const Vector x = vec({-1.0 + i / 200.0, -1.0 + j / 200.0});
      grid = std::min(grid, (A * x + b).maxCoeff());
    }
  }
  CHECK(s.value <= grid + 1e-12);
  CHECK(s.value >= grid - 0.02);
}

TEST_CASE("simplex-constrained l1 regression matches a grid") {
  Matrix A(4, 2);
  A << 1.0, 0.2, -0.3, 0.8, 0.5, 0.5, 0.9, -0.4;
  const Vector b = vec({0.4, 0.1, 0.3, 0.2});
  const MinMaxLpSolution s = l1_regression_simplex_lp(A, b);
  CHECK(s.x.sum() == doctest::Approx(1.0));
  CHECK((s.x.array() >= -1e-12).all());
  auto f = [&](double t) { return (A * vec({t, 1.0 - t}) - b).cwiseAbs().mean(); };
  const GridMinimum g = grid_minimize(f, 0.0, 1.0, 1e-5);
  CHECK(s.value == doctest::Approx(g.value).epsilon(1e-6));
  CHECK(s.value <= g.value + 1e-12);
}

TEST_CASE("FISTA satisfies the lasso optimality conditions") {
  Rng rng(2);
  Matrix A(30, 8);
  Vector b(30);
  for (int i = 0; i < 30; ++i) {
    b(i) = rng.normal();
    for (int j = 0; j < 8; ++j) A(i, j) = rng.normal() / std::sqrt(30.0);
  }
  for (double tau : {1e-4, 0.05, 0.3}) {
    const FistaResult r = fista_lasso(A, b, tau);
    const Vector grad = A.transpose() * (A * r.x - b);
    CAPTURE(tau);
    for (int j = 0; j < 8; ++j) {
      if (r.x(j) != 0.0) {
        CHECK(std::abs(grad(j) + tau * (r.x(j) > 0 ? 1.0 : -1.0)) <= 1e-7);
      } else {
        CHECK(std::abs(grad(j)) <= tau + 1e-7);
      }
    }
    CHECK(r.value == doctest::Approx(0.5 * (A * r.x - b).squaredNorm() + tau * r.x.lpNorm<1>()));
  }
  CHECK_THROWS_AS(fista_lasso(A, b, -1.0), InvalidInput);
}

TEST_CASE("grid minimization") {
  const GridMinimum a = grid_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 0.1);
  CHECK(a.x == doctest::Approx(0.3));
  const GridMinimum b = grid_minimize([](double x) { return -x; }, 0.0, 1.0, 0.3);
  CHECK(b.x == 1.0);
  CHECK(b.value == -1.0);
  CHECK_THROWS_AS(grid_minimize([](double x) { return x; }, 1.0, 0.0, 0.1), InvalidInput);
}
