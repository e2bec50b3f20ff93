#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "mlmc/estimators.hpp"

namespace mlmc {

// f_max(x) = max_i f_i(x) for N convex G-Lipschitz components. Value and
// subgradient evaluations are counted separately; both counters feed a
// shared total counter.
class MaxProblem {
 public:
  using Value = std::function<double(int i, const Vector& x)>;
  using Subgradient = std::function<void(int i, const Vector& x, Vector& out)>;

  MaxProblem(int n, int dimension, double G, Value value, Subgradient subgradient,
             std::shared_ptr<QueryCounter> total = nullptr);
  // f_i(x) = <a_i, x> + b_i with rows a_i of A; G = max_i ||a_i||.
  static MaxProblem affine(Matrix A, Vector b, std::shared_ptr<QueryCounter> total = nullptr);

  int size() const { return n_; }
  int dimension() const { return dimension_; }
  double lipschitz_bound() const { return G_; }

  double value(int i, const Vector& x) const {
    value_counter_->add(1);
    return value_(i, x);
  }
  void subgradient(int i, const Vector& x, Vector& out) const {
    grad_counter_->add(1);
    subgradient_(i, x, out);
  }
  // All N values; counts N.
  Vector values(const Vector& x) const;
  // Uncounted evaluation of f_max for reporting.
  double max_value_uncounted(const Vector& x) const;

  std::int64_t value_queries() const { return value_counter_->count(); }
  std::int64_t grad_queries() const { return grad_counter_->count(); }
  const std::shared_ptr<QueryCounter>& total_counter() const { return total_; }

 private:
  int n_;
  int dimension_;
  double G_;
  Value value_;
  Subgradient subgradient_;
  std::shared_ptr<QueryCounter> total_;
  std::shared_ptr<QueryCounter> value_counter_;
  std::shared_ptr<QueryCounter> grad_counter_;
};

// eps' = eps / (2 ln N).
double smoothing_scale(double epsilon, int n);

struct SoftmaxValue {
  double value = 0.0;
  Vector probs;
};

// Max-subtracted log-sum-exp of values / eps' (times eps') and softmax weights.
SoftmaxValue softmax_from_values(const Vector& values, double eps_prime);
// Same at x; counts N value queries. N < 2 is rejected.
SoftmaxValue softmax_value_probs(const MaxProblem& problem, const Vector& x, double eps_prime);

struct SoftmaxContext {
  double eps_prime = 0.0;
  double radius = 0.0;
  Vector anchor;
  Vector anchor_values;
  Vector anchor_probs;
  std::vector<double> cumulative;

  int sample_index(Rng& rng) const;
};

// Anchor at x_bar with radius eps'/G; counts N value queries.
SoftmaxContext make_softmax_context(const MaxProblem& problem, const Vector& anchor, double eps_prime);

struct RejectionStats {
  std::int64_t rounds = 0;
  std::int64_t accepted = 0;
};

// Rejection sampler for grad f_smax(x), x within the context radius of the
// anchor. Returns the accepted index; exactly one subgradient query.
int softmax_grad_est(const SoftmaxContext& ctx, const MaxProblem& problem, const Vector& x, Rng& rng, Vector& out,
                     RejectionStats* stats = nullptr);

// Stochastic gradient oracle for f_smax backed by the rejection sampler.
// Holds pointers to problem and ctx, which must outlive it.
StochasticGradientOracle softmax_oracle(const MaxProblem& problem, const SoftmaxContext& ctx);

struct BrooConfig {
  double budget_constant = 32.0;
  // Multiply the base budget by ceil(log2(1/p_f)).
  bool inflate = true;
  EpochSgdConfig sgd;
};

// ceil(c G^2/(lambda^2 rho^2)) * ceil(log2(1/p_f)).
std::int64_t broo_budget(double G, double lambda, double rho, double p_f, const BrooConfig& config = {});

// Ball-regularized optimization oracle of radius r for f_smax: EpochSGD on
// f_smax + (lambda/2)||. - center||^2 over X & ball(center, r).
Vector broo(const MaxProblem& problem, double eps_prime, const Vector& center, double lambda, double rho, double r,
            const ConvexDomain& domain, double p_f, Rng& rng, const BrooConfig& config = {});

using BallOracle = std::function<Vector(const Vector& center, double lambda, double rho, Rng& rng)>;

// alpha_tau = tau / (1 + tau + sqrt(1 + 2 tau)).
double bisection_alpha(double tau);

struct BisectionResult {
  enum class Exit { LowerBoundary, Middle, Bisected };
  double lambda = 0.0;
  Exit exit = Exit::Bisected;
  int broo_calls = 0;
  int halving_steps = 0;
  int bisection_steps = 0;
};

BisectionResult lambda_bisection(const Vector& x, const Vector& v, double A, const BallOracle& oracle,
                                 double lambda_min, double lambda_max, double G, double R, double r, Rng& rng);

struct ApmParams {
  // Target accuracy used by the approximation schedules.
  double epsilon = 0.0;
  double R = 0.0;
  double A0 = 0.0;
  double A_max = 0.0;
  std::int64_t K_max = 0;
  double r = std::numeric_limits<double>::infinity();
  double phi_scale = 60.0;
  double delta_scale = 120.0;
  double sigma_scale = 60.0;

  double phi(double lambda, double a) const { return epsilon / (phi_scale * lambda * a); }
  double delta() const { return epsilon / (delta_scale * R); }
  double sigma2(double a) const { return epsilon / (sigma_scale * a); }
};

// a solving lambda a^2 = A + a.
double next_step_weight(double lambda, double A);

using NextLambda = std::function<double(const Vector& x, const Vector& v, double A, Rng& rng)>;
// Approximate prox of f at y, returning a point of X.
using ApproxProx = std::function<Vector(const Vector& y, double lambda, double phi, Rng& rng)>;
using MoreauGradient =
    std::function<Vector(const Vector& y, double lambda, double delta, double sigma2, Rng& rng)>;

struct ApmStep {
  std::int64_t k = 0;
  double lambda = 0.0;
  double a = 0.0;
  double A_prev = 0.0;
  double A = 0.0;
  Vector x, v, y;
};

struct ApmResult {
  Vector x;
  std::int64_t iterations = 0;
  double A = 0.0;
  bool reached_A_max = false;
};

ApmResult accel_prox(const NextLambda& next_lambda, const ApproxProx& prox, const MoreauGradient& gradient,
                     const Vector& x0, const ApmParams& params, const ConvexDomain& domain, Rng& rng,
                     const std::function<void(const ApmStep&)>& observer = nullptr);

struct MinMaxConfig {
  double estimator_c = 32.0;
  double phi_scale = 60.0;
  double delta_scale = 120.0;
  double sigma_scale = 60.0;
  double k_max_constant = 8.0;
  // lambda_min is capped at this fraction of lambda_max.
  double lambda_min_fraction = 0.25;
  BrooConfig broo;
  EpochSgdConfig sgd;
  std::optional<std::int64_t> k_max_override;
};

struct MinMaxSchedule {
  double eps_prime = 0.0;
  double r = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::int64_t K_max = 0;
  std::int64_t bisection_calls = 0;
  double p_f = 0.0;
  ApmParams apm;
};

MinMaxSchedule min_the_max_schedule(int n, double G, double R, double epsilon, const MinMaxConfig& config = {});

struct MinMaxResult {
  Vector x;
  std::int64_t value_queries = 0;
  std::int64_t grad_queries = 0;
  std::int64_t iterations = 0;
  bool reached_A_max = false;
  MinMaxSchedule schedule;
};

// Minimizes f_max over X contained in ball(x0, R) to accuracy epsilon.
MinMaxResult min_the_max(const MaxProblem& problem, const ConvexDomain& domain, const Vector& x0, double R,
                         double epsilon, Rng& rng, const MinMaxConfig& config = {});

}  // namespace mlmc
