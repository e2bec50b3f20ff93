#include "mlmc/minmax.hpp"

#include <algorithm>

#include "mlmc/error.hpp"

namespace mlmc {

MaxProblem::MaxProblem(int n, int dimension, double G, Value value, Subgradient subgradient,
                       std::shared_ptr<QueryCounter> total)
    : n_(n),
      dimension_(dimension),
      G_(G),
      value_(std::move(value)),
      subgradient_(std::move(subgradient)),
      total_(total ? std::move(total) : make_counter()),
      value_counter_(make_counter(total_)),
      grad_counter_(make_counter(total_)) {
  require(n >= 1 && dimension >= 1, "max problem needs components and a dimension");
  require(G > 0.0 && std::isfinite(G), "max problem needs a positive Lipschitz bound");
}

MaxProblem MaxProblem::affine(Matrix A, Vector b, std::shared_ptr<QueryCounter> total) {
  require(A.rows() == b.size() && A.rows() >= 1 && A.cols() >= 1, "affine data size mismatch");
  require(A.allFinite() && b.allFinite(), "affine data must be finite");
  const double G = A.rowwise().norm().maxCoeff();
  auto data = std::make_shared<const std::pair<Matrix, Vector>>(std::move(A), std::move(b));
  const int n = static_cast<int>(data->first.rows());
  const int d = static_cast<int>(data->first.cols());
  return MaxProblem(
      n, d, G, [data](int i, const Vector& x) { return data->first.row(i).dot(x) + data->second(i); },
      [data](int i, const Vector&, Vector& out) { out = data->first.row(i).transpose(); }, std::move(total));
}

Vector MaxProblem::values(const Vector& x) const {
  value_counter_->add(n_);
  Vector out(n_);
  for (int i = 0; i < n_; ++i) out(i) = value_(i, x);
  return out;
}

double MaxProblem::max_value_uncounted(const Vector& x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_; ++i) best = std::max(best, value_(i, x));
  return best;
}

double smoothing_scale(double epsilon, int n) {
  require(n >= 2, "softmax smoothing needs at least two components");
  require(epsilon > 0.0, "epsilon must be positive");
  return epsilon / (2.0 * std::log(static_cast<double>(n)));
}

SoftmaxValue softmax_from_values(const Vector& values, double eps_prime) {
  require(values.size() >= 2, "softmax needs at least two components");
  require(eps_prime > 0.0, "softmax scale must be positive");
  const double top = values.maxCoeff();
  SoftmaxValue out;
  out.probs = ((values.array() - top) / eps_prime).exp();
  const double total = out.probs.sum();
  out.probs /= total;
  out.value = top + eps_prime * std::log(total);
  return out;
}

SoftmaxValue softmax_value_probs(const MaxProblem& problem, const Vector& x, double eps_prime) {
  require(problem.size() >= 2, "softmax needs at least two components");
  return softmax_from_values(problem.values(x), eps_prime);
}

int SoftmaxContext::sample_index(Rng& rng) const {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto index = std::distance(cumulative.begin(), it);
  return static_cast<int>(std::min<std::ptrdiff_t>(index, static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

SoftmaxContext make_softmax_context(const MaxProblem& problem, const Vector& anchor, double eps_prime) {
  require(anchor.size() == problem.dimension() && anchor.allFinite(), "anchor must be finite");
  SoftmaxContext ctx;
  ctx.eps_prime = eps_prime;
  ctx.radius = eps_prime / problem.lipschitz_bound();
  ctx.anchor = anchor;
  ctx.anchor_values = problem.values(anchor);
  ctx.anchor_probs = softmax_from_values(ctx.anchor_values, eps_prime).probs;
  ctx.cumulative.resize(ctx.anchor_probs.size());
  double running = 0.0;
  for (Eigen::Index i = 0; i < ctx.anchor_probs.size(); ++i) {
    running += ctx.anchor_probs(i);
    ctx.cumulative[i] = running;
  }
  return ctx;
}

int softmax_grad_est(const SoftmaxContext& ctx, const MaxProblem& problem, const Vector& x, Rng& rng, Vector& out,
                     RejectionStats* stats) {
  const double distance = (x - ctx.anchor).norm();
  if (!(distance <= ctx.radius * (1.0 + 1e-9) + 1e-12)) {
    throw ContractViolation("softmax gradient queried at distance " + std::to_string(distance) +
                            " outside the anchor radius " + std::to_string(ctx.radius));
  }
  for (;;) {
    const int i = ctx.sample_index(rng);
    const double q = std::exp((problem.value(i, x) - ctx.anchor_values(i)) / ctx.eps_prime - 1.0);
    if (stats) ++stats->rounds;
    if (rng.uniform() < q) {
      if (stats) ++stats->accepted;
      problem.subgradient(i, x, out);
      return i;
    }
  }
}

StochasticGradientOracle softmax_oracle(const MaxProblem& problem, const SoftmaxContext& ctx) {
  const MaxProblem* p = &problem;
  const SoftmaxContext* c = &ctx;
  return StochasticGradientOracle(
      problem.dimension(), problem.lipschitz_bound(),
      [p, c](const Vector& x, Rng& rng, Vector& out) { softmax_grad_est(*c, *p, x, rng, out); });
}

std::int64_t broo_budget(double G, double lambda, double rho, double p_f, const BrooConfig& config) {
  require(G > 0.0 && lambda > 0.0 && rho > 0.0, "BROO budget needs positive G, lambda and rho");
  require(p_f > 0.0 && p_f < 1.0, "failure probability must lie in (0, 1)");
  const std::int64_t base = ceil_count(config.budget_constant * G * G / (lambda * lambda * rho * rho));
  const std::int64_t boost = config.inflate ? std::max<std::int64_t>(1, ceil_count(std::log2(1.0 / p_f))) : 1;
  return std::max<std::int64_t>(1, base) * boost;
}

Vector broo(const MaxProblem& problem, double eps_prime, const Vector& center, double lambda, double rho, double r,
            const ConvexDomain& domain, double p_f, Rng& rng, const BrooConfig& config) {
  require(lambda > 0.0 && rho > 0.0 && r > 0.0, "BROO needs positive lambda, rho and r");
  require(r <= eps_prime / problem.lipschitz_bound() * (1.0 + 1e-12), "BROO radius exceeds the softmax radius");
  const SoftmaxContext ctx = make_softmax_context(problem, center, eps_prime);
  const StochasticGradientOracle oracle = softmax_oracle(problem, ctx);
  const SimpleRegularizer psi = SimpleRegularizer::quadratic(lambda, center);
  const ConvexDomain local = ConvexDomain::intersect_ball(center, r, domain);
  const CompositeObjective objective{oracle, psi, local, lambda};
  return epoch_sgd(objective, broo_budget(problem.lipschitz_bound(), lambda, rho, p_f, config), rng, config.sgd);
}

double bisection_alpha(double tau) {
  require(tau >= 0.0, "alpha needs tau >= 0");
  return tau / (1.0 + tau + std::sqrt(1.0 + 2.0 * tau));
}

BisectionResult lambda_bisection(const Vector& x, const Vector& v, double A, const BallOracle& oracle,
                                 double lambda_min, double lambda_max, double G, double R, double r, Rng& rng) {
  require(lambda_min > 0.0 && lambda_min < lambda_max, "need 0 < lambda_min < lambda_max");
  require(lambda_max >= 2.0 * G / r * (1.0 - 1e-12), "need lambda_max >= 2G/r");
  require(A >= 0.0 && R > 0.0 && r > 0.0, "invalid bisection arguments");
  BisectionResult result;
  auto movement = [&](double lambda) {
    const double alpha = bisection_alpha(2.0 * A * lambda);
    const Vector y = alpha * x + (1.0 - alpha) * v;
    ++result.broo_calls;
    return (oracle(y, lambda, r / 17.0, rng) - y).norm();
  };
  const double low = 13.0 * r / 16.0;
  const double high = 15.0 * r / 16.0;
  double lambda = lambda_max;
  double last = 0.0;
  while (lambda >= lambda_min) {
    last = movement(lambda);
    if (last > low) break;
    lambda /= 2.0;
    ++result.halving_steps;
  }
  if (lambda <= lambda_min) {
    result.lambda = 2.0 * lambda;
    result.exit = BisectionResult::Exit::LowerBoundary;
    return result;
  }
  double upper = 2.0 * lambda;
  double lower = lambda;
  if (last <= high) {
    result.lambda = lower;
    result.exit = BisectionResult::Exit::Middle;
    return result;
  }
  double mid = std::sqrt(upper * lower);
  double delta_mid = movement(mid);
  while ((delta_mid < low || delta_mid > high) && std::log2(upper / lower) >= r / (8.0 * (R + G / lower))) {
    if (delta_mid < low) {
      upper = mid;
    } else {
      lower = mid;
    }
    mid = std::sqrt(upper * lower);
    delta_mid = movement(mid);
    ++result.bisection_steps;
  }
  result.lambda = mid;
  result.exit = BisectionResult::Exit::Bisected;
  return result;
}

double next_step_weight(double lambda, double A) {
  require(lambda > 0.0 && A >= 0.0, "step weight needs lambda > 0 and A >= 0");
  return (1.0 + std::sqrt(1.0 + 4.0 * lambda * A)) / (2.0 * lambda);
}

ApmResult accel_prox(const NextLambda& next_lambda, const ApproxProx& prox, const MoreauGradient& gradient,
                     const Vector& x0, const ApmParams& params, const ConvexDomain& domain, Rng& rng,
                     const std::function<void(const ApmStep&)>& observer) {
  require(params.epsilon > 0.0 && params.R > 0.0 && params.A0 >= 0.0 && params.A_max > 0.0 && params.K_max >= 1,
          "invalid accelerated prox parameters");
  require(domain.contains(x0), "x0 must lie in X");
  ApmStep step;
  step.x = x0;
  step.v = x0;
  double A = params.A0;
  ApmResult result;
  for (std::int64_t k = 0;; ++k) {
    const double lambda = next_lambda(step.x, step.v, A, rng);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw NumericFailure("next lambda is not a positive number");
    const double a = next_step_weight(lambda, A);
    const double A_next = A + a;
    step.y = (A / A_next) * step.x + (a / A_next) * step.v;
    Vector x_next = prox(step.y, lambda, params.phi(lambda, a), rng);
    if (std::isfinite(params.r) && (x_next - step.y).norm() > params.r * (1.0 + 1e-9) + 1e-12) {
      throw ContractViolation("approximate prox left the movement ball");
    }
    const Vector g = gradient(step.y, lambda, params.delta(), params.sigma2(a), rng);
    step.v = domain.project(step.v - 0.5 * a * g);
    step.x = std::move(x_next);
    step.k = k + 1;
    step.lambda = lambda;
    step.a = a;
    step.A_prev = A;
    step.A = A_next;
    A = A_next;
    if (observer) observer(step);
    if (A >= params.A_max || k + 1 == params.K_max) {
      result.reached_A_max = A >= params.A_max;
      result.iterations = k + 1;
      break;
    }
  }
  result.x = step.x;
  result.A = A;
  return result;
}

MinMaxSchedule min_the_max_schedule(int n, double G, double R, double epsilon, const MinMaxConfig& config) {
  require(n >= 2, "min-the-max needs at least two components");
  require(G > 0.0 && R > 0.0 && epsilon > 0.0, "G, R and epsilon must be positive");
  require(epsilon < 0.5 * G * R / std::log(static_cast<double>(n)), "epsilon must be below GR/(2 ln N)");
  MinMaxSchedule s;
  s.eps_prime = smoothing_scale(epsilon, n);
  s.r = s.eps_prime / G;
  s.lambda_max = 2.0 * G / s.r;
  const double log_ratio = std::log(G * R / epsilon);
  const double lambda_min = epsilon / (std::pow(s.r, 4.0 / 3.0) * std::pow(R, 2.0 / 3.0)) * log_ratio * log_ratio;
  s.lambda_min = std::min(lambda_min, config.lambda_min_fraction * s.lambda_max);
  s.K_max = config.k_max_override.value_or(
      ceil_count(config.k_max_constant * (std::pow(R / s.r, 2.0 / 3.0) * std::log2(G * R / epsilon) +
                                          std::sqrt(s.lambda_min * R * R / epsilon))));
  s.bisection_calls = ceil_count(
      2.0 * (std::log2(s.lambda_max / s.lambda_min) + std::log2(8.0 * (R + G / s.lambda_min) / s.r)) + 4.0);
  s.p_f = 1.0 / (6.0 * static_cast<double>(s.K_max) * static_cast<double>(s.bisection_calls));
  const double half = 0.5 * epsilon;
  s.apm.epsilon = half;
  s.apm.R = R;
  s.apm.A0 = R / G;
  s.apm.A_max = 9.0 * R * R / half;
  s.apm.K_max = s.K_max;
  s.apm.r = s.r;
  s.apm.phi_scale = config.phi_scale;
  s.apm.delta_scale = config.delta_scale;
  s.apm.sigma_scale = config.sigma_scale;
  return s;
}

MinMaxResult min_the_max(const MaxProblem& problem, const ConvexDomain& domain, const Vector& x0, double R,
                         double epsilon, Rng& rng, const MinMaxConfig& config) {
  require(x0.size() == problem.dimension() && domain.dimension() == problem.dimension(), "dimension mismatch");
  MinMaxResult result;
  result.schedule = min_the_max_schedule(problem.size(), problem.lipschitz_bound(), R, epsilon, config);
  const MinMaxSchedule& s = result.schedule;
  const double G = problem.lipschitz_bound();
  const std::int64_t values_before = problem.value_queries();
  const std::int64_t grads_before = problem.grad_queries();

  const BallOracle ball_oracle = [&](const Vector& center, double lambda, double rho, Rng& r) {
    return broo(problem, s.eps_prime, center, lambda, rho, s.r, domain, s.p_f, r, config.broo);
  };
  const NextLambda next = [&](const Vector& x, const Vector& v, double A, Rng& r) {
    return lambda_bisection(x, v, A, ball_oracle, s.lambda_min, s.lambda_max, G, R, s.r, r).lambda;
  };
  const ApproxProx prox = [&](const Vector& y, double lambda, double phi, Rng& r) {
    const SoftmaxContext ctx = make_softmax_context(problem, y, s.eps_prime);
    const StochasticGradientOracle oracle = softmax_oracle(problem, ctx);
    const SimpleRegularizer psi = SimpleRegularizer::quadratic(lambda, y);
    const ConvexDomain local = ConvexDomain::intersect_ball(y, s.r, domain);
    const CompositeObjective objective{oracle, psi, local, lambda};
    return epoch_sgd(objective, ceil_count(16.0 * G * G / (lambda * phi)), r, config.sgd);
  };
  OptEstOptions estimator;
  estimator.c = config.estimator_c;
  estimator.odc = epoch_sgd_solver(config.sgd);
  const MoreauGradient gradient = [&](const Vector& y, double lambda, double delta, double sigma2, Rng& r) {
    const SoftmaxContext ctx = make_softmax_context(problem, y, s.eps_prime);
    const StochasticGradientOracle oracle = softmax_oracle(problem, ctx);
    const ConvexDomain local = ConvexDomain::intersect_ball(y, s.r, domain);
    return mor_grad_est(oracle, y, lambda, delta, sigma2, local, r, estimator).gradient;
  };
  const ApmResult run = accel_prox(next, prox, gradient, x0, s.apm, domain, rng);
  result.x = run.x;
  result.iterations = run.iterations;
  result.reached_A_max = run.reached_A_max;
  result.value_queries = problem.value_queries() - values_before;
  result.grad_queries = problem.grad_queries() - grads_before;
  return result;
}

}  // namespace mlmc
