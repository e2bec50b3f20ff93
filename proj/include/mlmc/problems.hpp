#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "mlmc/domain.hpp"
#include "mlmc/linalg.hpp"
#include "mlmc/oracle.hpp"
#include "mlmc/regularizer.hpp"

namespace mlmc {

using ProxMap = std::function<Vector(double lambda, const Vector& y)>;

// Ground-truth bundle: F = f + psi over a domain, with exact f evaluation,
// an exact subgradient selection and, when known, the minimizer of F and the
// proximal map of f.
struct BenchmarkProblem {
  std::string kind;
  StochasticGradientOracle oracle;
  SimpleRegularizer regularizer;
  ConvexDomain domain;
  std::optional<Vector> exact_minimizer;
  ProxMap exact_prox;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> subgradient;
  nlohmann::json description;

  double mu() const { return regularizer.weight(); }
  double G() const { return oracle.lipschitz_bound(); }
  int dimension() const { return oracle.dimension(); }
  double total_objective(const Vector& x) const { return objective(x) + regularizer.value(x); }
};

double soft_threshold(double y, double threshold);

// f(x) = |x| in one dimension (exact oracle, subgradient 0 at the kink),
// psi = (weight/2)(x - center)^2.
BenchmarkProblem soft_threshold_problem(double center = 2.0, double weight = 1.0);

// f(x) = (1/n) sum_i |<a_i, x> - b_i| with uniform row sampling; rows of A are a_i.
BenchmarkProblem l1_regression_problem(Matrix A, Vector b, SimpleRegularizer regularizer, ConvexDomain domain);

struct RegressionData {
  Matrix A;
  Vector b;
};
// Rows a_i ~ N(0, I/d), b = A x_true + noise with x_true drawn uniformly on the simplex.
RegressionData make_regression_data(int n, int d, std::uint64_t seed, double noise = 0.1);

// f(x) = (1/2)||x - a||^2 with oracle x - a + noise * xi, xi ~ N(0, I). The
// bound G is derived from the domain when it is a ball, else taken from G.
BenchmarkProblem quadratic_problem(Vector a, double noise, SimpleRegularizer regularizer, ConvexDomain domain,
                                   double G = -1.0);

// P_{f,lambda}(y) = argmin_{x in X} f(x) + (lambda/2)||x - y||^2. Uses the
// analytic map when present, otherwise a certified deterministic solve.
Vector exact_prox_reference(const BenchmarkProblem& problem, double lambda, const Vector& y);

// f_lambda(y) = min_x f(x) + (lambda/2)||x - y||^2 and its gradient lambda(y - P(y)).
double moreau_envelope(const BenchmarkProblem& problem, double lambda, const Vector& y);
Vector moreau_gradient(const BenchmarkProblem& problem, double lambda, const Vector& y);

// F_i(x) = (mu/2)||x - c_i||^2 + w ||x - p||_1 with centers c_i (columns), so
// F = (1/n) sum F_i is mu-strongly convex and piecewise quadratic with
// minimizer p + soft(mean(c) - p, w/mu). G bounds every term's subgradient
// over ball(x0, R).
struct FiniteSumBenchmark {
  FiniteSumFamily family;
  Vector x0;
  double R = 0.0;
  double mu = 0.0;
  double G = 0.0;
  Vector minimizer;
};
FiniteSumBenchmark piecewise_quadratic_family(const Matrix& centers, double mu, double weight, const Vector& kink,
                                              const Vector& x0, double R);

nlohmann::json domain_to_json(const ConvexDomain& domain);
ConvexDomain domain_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const BenchmarkProblem& problem);
BenchmarkProblem problem_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace mlmc
