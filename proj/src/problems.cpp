#include "mlmc/problems.hpp"

#include "mlmc/ellipsoid.hpp"
#include "mlmc/error.hpp"

namespace mlmc {

double soft_threshold(double y, double threshold) {
  const double magnitude = std::max(std::abs(y) - threshold, 0.0);
  return y > 0.0 ? magnitude : (y < 0.0 ? -magnitude : 0.0);
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

BenchmarkProblem soft_threshold_problem(double center, double weight) {
  require(weight > 0.0, "soft-threshold weight must be positive");
  auto sampler = [](const Vector& x, Rng&, Vector& out) { out(0) = sign(x(0)); };
  Vector c(1);
  c(0) = center;
  Vector minimizer(1);
  minimizer(0) = soft_threshold(center, 1.0 / weight);
  BenchmarkProblem p{
      "soft_threshold",
      StochasticGradientOracle(1, 1.0, sampler, true),
      SimpleRegularizer::quadratic(weight, c),
      ConvexDomain::whole_space(1),
      minimizer,
      [](double lambda, const Vector& y) {
        require(lambda > 0.0, "prox parameter must be positive");
        Vector out(1);
        out(0) = soft_threshold(y(0), 1.0 / lambda);
        return out;
      },
      [](const Vector& x) { return std::abs(x(0)); },
      [](const Vector& x) {
        Vector g(1);
        g(0) = sign(x(0));
        return g;
      },
      {}};
  p.description = {{"kind", "soft_threshold"}, {"dimension", 1}, {"center", center}, {"lambda", weight}};
  return p;
}

BenchmarkProblem l1_regression_problem(Matrix A, Vector b, SimpleRegularizer regularizer, ConvexDomain domain) {
  require(A.rows() >= 1 && A.cols() >= 1, "regression matrix must be nonempty");
  require(b.size() == A.rows(), "regression targets size mismatch");
  require(A.allFinite() && b.allFinite(), "regression data must be finite");
  const int d = static_cast<int>(A.cols());
  require(regularizer.dimension() == d && domain.dimension() == d, "regression dimension mismatch");
  const double G = std::sqrt(A.rowwise().squaredNorm().mean());
  auto data = std::make_shared<const RegressionData>(RegressionData{A, b});
  auto sampler = [data](const Vector& x, Rng& rng, Vector& out) {
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(data->A.rows())));
    const double residual = data->A.row(i).dot(x) - data->b(i);
    out = sign(residual) * data->A.row(i).transpose();
  };
  BenchmarkProblem p{"l1_regression",
                     StochasticGradientOracle(d, G, sampler, A.rows() == 1),
                     std::move(regularizer),
                     std::move(domain),
                     std::nullopt,
                     nullptr,
                     [data](const Vector& x) { return (data->A * x - data->b).cwiseAbs().mean(); },
                     [data](const Vector& x) {
                       const Vector s = (data->A * x - data->b).unaryExpr([](double r) { return sign(r); });
                       return Vector(data->A.transpose() * s / static_cast<double>(data->A.rows()));
                     },
                     {}};
  p.description = {{"kind", "l1_regression"},
                   {"dimension", d},
                   {"A", matrix_to_json(A)},
                   {"b", vector_to_json(b)},
                   {"G", G},
                   {"lambda", p.regularizer.weight()},
                   {"center", vector_to_json(p.regularizer.center())},
                   {"domain", domain_to_json(p.domain)}};
  return p;
}

RegressionData make_regression_data(int n, int d, std::uint64_t seed, double noise) {
  require(n >= 1 && d >= 1, "regression sizes must be positive");
  Rng rng(seed);
  RegressionData data{Matrix(n, d), Vector(n)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) data.A(i, j) = scale * rng.normal();
  Vector truth(d);
  for (int j = 0; j < d; ++j) truth(j) = -std::log(1.0 - rng.uniform());
  truth /= truth.sum();
  for (int i = 0; i < n; ++i) data.b(i) = data.A.row(i).dot(truth) + noise * rng.normal();
  return data;
}

BenchmarkProblem quadratic_problem(Vector a, double noise, SimpleRegularizer regularizer, ConvexDomain domain,
                                   double G) {
  const int d = static_cast<int>(a.size());
  require(d >= 1 && a.allFinite(), "quadratic center must be finite");
  require(noise >= 0.0, "noise level must be nonnegative");
  require(regularizer.dimension() == d && domain.dimension() == d, "quadratic dimension mismatch");
  if (G < 0.0) {
    require(domain.kind() == ConvexDomain::Kind::Ball || domain.kind() == ConvexDomain::Kind::BallIntersection,
            "quadratic benchmark needs G or a bounded ball domain");
    const double reach = (a - domain.ball_center()).norm() + domain.ball_radius();
    G = std::sqrt(reach * reach + noise * noise * d);
  }
  auto sampler = [a, noise](const Vector& x, Rng& rng, Vector& out) {
    out = x - a;
    if (noise > 0.0)
      for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += noise * rng.normal();
  };
  const double w = regularizer.weight();
  const Vector minimizer =
      domain.project((a + w * regularizer.center() - regularizer.linear()) / (1.0 + w));
  BenchmarkProblem p{"quadratic",
                     StochasticGradientOracle(d, G, sampler, noise == 0.0),
                     std::move(regularizer),
                     domain,
                     minimizer,
                     [a, domain](double lambda, const Vector& y) {
                       require(lambda > 0.0, "prox parameter must be positive");
                       return domain.project((a + lambda * y) / (1.0 + lambda));
                     },
                     [a](const Vector& x) { return 0.5 * (x - a).squaredNorm(); },
                     [a](const Vector& x) { return Vector(x - a); },
                     {}};
  p.description = {{"kind", "quadratic"},
                   {"dimension", d},
                   {"a", vector_to_json(a)},
                   {"noise", noise},
                   {"G", G},
                   {"lambda", w},
                   {"center", vector_to_json(p.regularizer.center())},
                   {"domain", domain_to_json(p.domain)}};
  return p;
}

Vector exact_prox_reference(const BenchmarkProblem& problem, double lambda, const Vector& y) {
  require(lambda > 0.0 && std::isfinite(lambda), "prox parameter must be positive");
  require(y.size() == problem.dimension() && y.allFinite(), "prox point must be finite");
  if (problem.exact_prox) return problem.exact_prox(lambda, y);
  require(static_cast<bool>(problem.objective) && static_cast<bool>(problem.subgradient),
          "problem has neither an analytic prox nor exact first-order access");
  require(problem.domain.kind() != ConvexDomain::Kind::Simplex,
          "reference prox needs a full-dimensional domain");
  FirstOrderOracle h = [&](const Vector& x) {
    return FirstOrderValue{problem.objective(x) + 0.5 * lambda * (x - y).squaredNorm(),
                           problem.subgradient(x) + lambda * (x - y)};
  };
  const Vector start = problem.domain.project(y);
  const double radius = 2.0 * h(start).subgradient.norm() / lambda * 1.01 + 1e-12;
  return certified_minimize(h, problem.domain, start, radius, 1e-9);
}

double moreau_envelope(const BenchmarkProblem& problem, double lambda, const Vector& y) {
  const Vector p = exact_prox_reference(problem, lambda, y);
  return problem.objective(p) + 0.5 * lambda * (p - y).squaredNorm();
}

Vector moreau_gradient(const BenchmarkProblem& problem, double lambda, const Vector& y) {
  return lambda * (y - exact_prox_reference(problem, lambda, y));
}

nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const nlohmann::json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  require(j.is_array() && !j.empty(), "matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    require(static_cast<Eigen::Index>(j[i].size()) == cols, "ragged matrix rows");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

nlohmann::json domain_to_json(const ConvexDomain& domain) {
  using Kind = ConvexDomain::Kind;
  switch (domain.kind()) {
    case Kind::WholeSpace: return {{"kind", "whole_space"}, {"dimension", domain.dimension()}};
    case Kind::Ball:
      return {{"kind", "ball"}, {"center", vector_to_json(domain.ball_center())}, {"radius", domain.ball_radius()}};
    case Kind::Box:
      return {{"kind", "box"}, {"lower", vector_to_json(domain.box_lower())},
              {"upper", vector_to_json(domain.box_upper())}};
    case Kind::Simplex:
      return {{"kind", "simplex"}, {"dimension", domain.dimension()}, {"total", domain.simplex_total()}};
    case Kind::BallIntersection:
      return {{"kind", "intersection"}, {"center", vector_to_json(domain.ball_center())},
              {"radius", domain.ball_radius()}, {"inner", domain_to_json(domain.inner())}};
  }
  return {};
}

ConvexDomain domain_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "whole_space") return ConvexDomain::whole_space(j.at("dimension").get<int>());
  if (kind == "ball") return ConvexDomain::ball(vector_from_json(j.at("center")), j.at("radius").get<double>());
  if (kind == "box") return ConvexDomain::box(vector_from_json(j.at("lower")), vector_from_json(j.at("upper")));
  if (kind == "simplex") return ConvexDomain::simplex(j.at("dimension").get<int>(), j.value("total", 1.0));
  if (kind == "intersection") {
    return ConvexDomain::intersect_ball(vector_from_json(j.at("center")), j.at("radius").get<double>(),
                                        domain_from_json(j.at("inner")));
  }
  throw InvalidInput("unknown domain kind: " + kind);
}

nlohmann::json problem_to_json(const BenchmarkProblem& problem) { return problem.description; }

namespace {

BenchmarkProblem problem_from_json_unchecked(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "soft_threshold") return soft_threshold_problem(j.value("center", 2.0), j.value("lambda", 1.0));
  if (kind != "l1_regression" && kind != "quadratic") throw InvalidInput("unknown problem kind: " + kind);
  const int d = j.at("dimension").get<int>();
  const ConvexDomain domain = j.contains("domain") ? domain_from_json(j.at("domain")) : ConvexDomain::whole_space(d);
  const Vector center = j.contains("center") ? vector_from_json(j.at("center")) : Vector::Zero(d);
  SimpleRegularizer psi(j.value("lambda", 0.0), center);
  if (kind == "l1_regression") {
    return l1_regression_problem(matrix_from_json(j.at("A")), vector_from_json(j.at("b")), psi, domain);
  }
  return quadratic_problem(vector_from_json(j.at("a")), j.value("noise", 0.0), psi, domain, j.value("G", -1.0));
}

}  // namespace

BenchmarkProblem problem_from_json(const nlohmann::json& j) {
  try {
    return problem_from_json_unchecked(j);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed problem description: ") + e.what());
  }
}

FiniteSumBenchmark piecewise_quadratic_family(const Matrix& centers, double mu, double weight, const Vector& kink,
                                              const Vector& x0, double R) {
  const int d = static_cast<int>(centers.rows());
  const int n = static_cast<int>(centers.cols());
  require(d >= 1 && n >= 1, "need at least one center");
  require(kink.size() == d && x0.size() == d, "dimension mismatch");
  require(mu > 0.0 && weight >= 0.0 && R > 0.0, "mu and R must be positive, weight nonnegative");
  double G = 0.0;
  for (int i = 0; i < n; ++i) G = std::max(G, mu * ((x0 - centers.col(i)).norm() + R));
  G += weight * std::sqrt(static_cast<double>(d));
  Vector minimizer = centers.rowwise().mean();
  for (int k = 0; k < d; ++k) minimizer(k) = kink(k) + soft_threshold(minimizer(k) - kink(k), weight / mu);
  require((minimizer - x0).norm() < R, "minimizer must lie inside ball(x0, R)");
  auto term = [centers, mu, weight, kink](int i, const Vector& x, double& value, Vector& g) {
    const Vector diff = x - centers.col(i);
    const Vector shift = x - kink;
    value = 0.5 * mu * diff.squaredNorm() + weight * shift.lpNorm<1>();
    g = mu * diff + weight * shift.unaryExpr([](double s) { return sign(s); });
  };
  return FiniteSumBenchmark{FiniteSumFamily(n, d, G, term), x0, R, mu, G, minimizer};
}

}  // namespace mlmc
