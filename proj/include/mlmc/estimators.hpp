#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mlmc/odc.hpp"

namespace mlmc {

struct MlmcConfig {
  std::int64_t t_max = 1;
  OdcSolver odc = epoch_sgd_solver();
  // Read x_0, x_{J-1}, x_J from one ODC run when the solver supports it.
  bool single_run = true;
  int geometric_cap = 64;
};

struct OptEstimate {
  Vector point;
  std::int64_t queries = 0;
  std::vector<int> levels_drawn;
};

struct OptEstParams {
  std::int64_t t_max = 1;
  std::int64_t n = 1;
};

// floor(log2 T_max).
int mlmc_max_level(std::int64_t t_max);

// x0 + 2^J (xJ - x_{J-1}) when 2^J <= T_max, x0 otherwise.
Vector mlmc_combine(int J, std::int64_t t_max, const Vector& x0, const Vector& x_prev, const Vector& x_J);

// Single draw with J ~ Geom(1/2).
OptEstimate mlmc_draw(const CompositeObjective& objective, const MlmcConfig& config, Rng& rng);
// Same estimator with the level J fixed (used for exact expectations).
OptEstimate mlmc_draw_at_level(const CompositeObjective& objective, const MlmcConfig& config, int J, Rng& rng);

// T_max = ceil(4cG^2 / (mu^2 min{delta^2, sigma^2/2})),
// N = ceil(32cG^2 log2(T_max) / (mu^2 sigma^2)), both at least 1.
OptEstParams opt_est_params(double G, double mu, double delta, double sigma2, double c = 32.0);

// Precomputed level iterates for an objective with an exact (rng-free)
// oracle. With such an oracle every ODC call at a given budget returns the
// same point, so x_0..x_jmax are computed once and each draw reduces to a
// level lookup. The cache refills itself whenever the objective changes.
class LevelCache {
 public:
  // Returns true when a refill was needed.
  bool prepare(const CompositeObjective& objective, const OdcSolver& odc, int max_level, Rng& rng);
  int max_level() const { return max_level_; }
  const Vector& level(int j) const { return levels_.at(j); }
  // mlmc_combine(J, 2^max_level, x_0, x_{J-1}, x_J) for J <= max_level.
  const Vector& combined(int J) const { return combined_.at(J); }
  std::int64_t fills() const { return fills_; }

 private:
  std::vector<double> key_;
  const void* oracle_ = nullptr;
  const void* domain_ = nullptr;
  int max_level_ = -1;
  std::vector<Vector> levels_;
  std::vector<Vector> combined_;
  std::int64_t fills_ = 0;
};

struct OptEstOptions {
  double c = 32.0;
  std::optional<std::int64_t> draws_override;
  OdcSolver odc = epoch_sgd_solver();
  bool single_run = true;
  bool record_levels = false;
  // Only valid with exact oracles.
  LevelCache* cache = nullptr;
  std::function<void(double delta, double sigma2, const OptEstParams&)> on_params;
};

// Average of N independent MLMC draws with parameters from opt_est_params.
OptEstimate opt_est(const CompositeObjective& objective, double delta, double sigma2, Rng& rng,
                    const OptEstOptions& options = {});

struct MorGradResult {
  Vector gradient;
  std::int64_t queries = 0;
  OptEstParams params;
};

// lambda (y - x), x = opt_est with psi = (lambda/2)||. - y||^2, mu = lambda,
// targets (delta/lambda, sigma^2/lambda^2).
MorGradResult mor_grad_est(const StochasticGradientOracle& oracle, const Vector& y, double lambda, double delta,
                           double sigma2, const ConvexDomain& domain, Rng& rng, const OptEstOptions& options = {});

// Exactly unbiased estimator over ball(x0, R) for F = (1/n) sum F_i.
struct UnbiasedConfig {
  EpochSgdConfig sgd;
  int geometric_cap = 64;
  std::optional<int> threshold_override;
};

enum class LevelMethod { EpochSgd, Ellipsoid };

// J_0 = ceil(4 log2(14 (n d^2 + d^4))).
int unbiased_threshold_level(int n, int d);
LevelMethod unbiased_level_method(int j, int threshold);
// ceil(2^{j/2}).
std::int64_t unbiased_ellipsoid_budget(int j);
// x0 + 2^J (x_J - x_{J-1}).
Vector unbiased_combine(int J, const Vector& x0, const Vector& x_prev, const Vector& x_J);

OptEstimate unbiased_opt_est(const FiniteSumFamily& family, const Vector& x0, double R, double mu, double G, Rng& rng,
                             const UnbiasedConfig& config = {});
// Same estimator with J fixed.
OptEstimate unbiased_opt_est_at_level(const FiniteSumFamily& family, const Vector& x0, double R, double mu, double G,
                                      int J, Rng& rng, const UnbiasedConfig& config = {});

}  // namespace mlmc
