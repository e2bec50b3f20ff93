#include "mlmc/estimators.hpp"

#include "mlmc/error.hpp"

namespace mlmc {

int mlmc_max_level(std::int64_t t_max) {
  require(t_max >= 1, "T_max must be at least 1");
  return floor_log2(t_max);
}

Vector mlmc_combine(int J, std::int64_t t_max, const Vector& x0, const Vector& x_prev, const Vector& x_J) {
  if (J > mlmc_max_level(t_max)) return x0;
  return x0 + std::ldexp(1.0, J) * (x_J - x_prev);
}

OptEstimate mlmc_draw_at_level(const CompositeObjective& objective, const MlmcConfig& config, int J, Rng& rng) {
  require(J >= 1, "MLMC level must be at least 1");
  require(static_cast<bool>(config.odc.solve), "MLMC needs an ODC solver");
  const std::int64_t before = objective.oracle.queries();
  OptEstimate out;
  out.levels_drawn.push_back(J);
  if (J > mlmc_max_level(config.t_max)) {
    out.point = config.odc.solve(objective, 1, rng);
  } else if (config.single_run && config.odc.solve_levels) {
    const std::vector<Vector> levels = config.odc.solve_levels(objective, J, rng);
    out.point = mlmc_combine(J, config.t_max, levels[0], levels[J - 1], levels[J]);
  } else {
    const Vector x0 = config.odc.solve(objective, 1, rng);
    const Vector x_prev = config.odc.solve(objective, std::int64_t{1} << (J - 1), rng);
    const Vector x_J = config.odc.solve(objective, std::int64_t{1} << J, rng);
    out.point = mlmc_combine(J, config.t_max, x0, x_prev, x_J);
  }
  out.queries = objective.oracle.queries() - before;
  return out;
}

OptEstimate mlmc_draw(const CompositeObjective& objective, const MlmcConfig& config, Rng& rng) {
  return mlmc_draw_at_level(objective, config, rng.geometric_half(config.geometric_cap), rng);
}

OptEstParams opt_est_params(double G, double mu, double delta, double sigma2, double c) {
  require(G > 0.0 && mu > 0.0 && delta > 0.0 && sigma2 > 0.0 && c > 0.0,
          "OptEst parameters must be positive");
  OptEstParams p;
  const double t_max = 4.0 * c * G * G / (mu * mu * std::min(delta * delta, 0.5 * sigma2));
  require(t_max < 4e18, "T_max overflows the query counter");
  p.t_max = std::max<std::int64_t>(1, ceil_count(t_max));
  const double n = 32.0 * c * G * G * std::log2(static_cast<double>(p.t_max)) / (mu * mu * sigma2);
  p.n = std::max<std::int64_t>(1, ceil_count(n));
  return p;
}

bool LevelCache::prepare(const CompositeObjective& objective, const OdcSolver& odc, int max_level, Rng& rng) {
  require(objective.oracle.deterministic(), "level cache requires an exact oracle");
  std::vector<double> key;
  key.reserve(2 + 2 * objective.psi.dimension());
  key.push_back(objective.mu);
  key.push_back(objective.psi.weight());
  const Vector& center = objective.psi.center();
  const Vector& linear = objective.psi.linear();
  key.insert(key.end(), center.data(), center.data() + center.size());
  key.insert(key.end(), linear.data(), linear.data() + linear.size());
  if (key == key_ && oracle_ == &objective.oracle && domain_ == &objective.domain && max_level == max_level_) {
    return false;
  }
  levels_.clear();
  if (odc.solve_levels) {
    levels_ = odc.solve_levels(objective, max_level, rng);
  } else {
    for (int j = 0; j <= max_level; ++j) levels_.push_back(odc.solve(objective, std::int64_t{1} << j, rng));
  }
  combined_.assign(1, levels_[0]);
  const std::int64_t t_max = std::int64_t{1} << max_level;
  for (int J = 1; J <= max_level; ++J) {
    combined_.push_back(mlmc_combine(J, t_max, levels_[0], levels_[J - 1], levels_[J]));
  }
  key_ = std::move(key);
  oracle_ = &objective.oracle;
  domain_ = &objective.domain;
  max_level_ = max_level;
  ++fills_;
  return true;
}

OptEstimate opt_est(const CompositeObjective& objective, double delta, double sigma2, Rng& rng,
                    const OptEstOptions& options) {
  const OptEstParams params =
      opt_est_params(objective.oracle.lipschitz_bound(), objective.mu, delta, sigma2, options.c);
  if (options.on_params) options.on_params(delta, sigma2, params);
  const std::int64_t draws = options.draws_override.value_or(params.n);
  require(draws >= 1, "OptEst needs at least one draw");
  const std::int64_t before = objective.oracle.queries();
  const int max_level = mlmc_max_level(params.t_max);
  OptEstimate out;
  out.point = Vector::Zero(objective.domain.dimension());
  if (options.cache != nullptr) {
    options.cache->prepare(objective, options.odc, max_level, rng);
    const Vector& x0 = options.cache->combined(0);
    for (std::int64_t i = 0; i < draws; ++i) {
      const int J = rng.geometric_half();
      if (options.record_levels) out.levels_drawn.push_back(J);
      out.point += J <= max_level ? options.cache->combined(J) : x0;
    }
  } else {
    MlmcConfig config{params.t_max, options.odc, options.single_run, 64};
    for (std::int64_t i = 0; i < draws; ++i) {
      const OptEstimate draw = mlmc_draw(objective, config, rng);
      if (options.record_levels) out.levels_drawn.push_back(draw.levels_drawn.front());
      out.point += draw.point;
    }
  }
  out.point /= static_cast<double>(draws);
  out.queries = objective.oracle.queries() - before;
  return out;
}

MorGradResult mor_grad_est(const StochasticGradientOracle& oracle, const Vector& y, double lambda, double delta,
                           double sigma2, const ConvexDomain& domain, Rng& rng, const OptEstOptions& options) {
  require(lambda > 0.0 && delta > 0.0 && sigma2 > 0.0, "MorGradEst parameters must be positive");
  require(y.size() == oracle.dimension() && y.allFinite(), "MorGradEst point must be finite");
  const SimpleRegularizer psi = SimpleRegularizer::quadratic(lambda, y);
  const CompositeObjective objective{oracle, psi, domain, lambda};
  MorGradResult out;
  OptEstOptions inner = options;
  inner.on_params = [&](double d, double s, const OptEstParams& p) {
    out.params = p;
    if (options.on_params) options.on_params(d, s, p);
  };
  const OptEstimate estimate = opt_est(objective, delta / lambda, sigma2 / (lambda * lambda), rng, inner);
  out.gradient = lambda * (y - estimate.point);
  out.queries = estimate.queries;
  return out;
}

int unbiased_threshold_level(int n, int d) {
  require(n >= 1 && d >= 1, "finite sum sizes must be positive");
  const double nd = static_cast<double>(n) * d * d + std::pow(static_cast<double>(d), 4);
  return static_cast<int>(std::ceil(4.0 * std::log2(14.0 * nd)));
}

LevelMethod unbiased_level_method(int j, int threshold) {
  return j <= threshold ? LevelMethod::EpochSgd : LevelMethod::Ellipsoid;
}

std::int64_t unbiased_ellipsoid_budget(int j) {
  require(j >= 0 && j < 124, "level out of range");
  return ceil_count(std::exp2(0.5 * j));
}

Vector unbiased_combine(int J, const Vector& x0, const Vector& x_prev, const Vector& x_J) {
  return x0 + std::ldexp(1.0, J) * (x_J - x_prev);
}

OptEstimate unbiased_opt_est_at_level(const FiniteSumFamily& family, const Vector& x0, double R, double mu, double G,
                                      int J, Rng& rng, const UnbiasedConfig& config) {
  require(J >= 1, "level must be at least 1");
  require(x0.size() == family.dimension() && x0.allFinite(), "start point must be finite");
  require(R > 0.0 && mu > 0.0 && G > 0.0, "R, mu and G must be positive");
  const int threshold =
      config.threshold_override.value_or(unbiased_threshold_level(family.terms(), family.dimension()));
  const std::int64_t before = family.queries();
  const ConvexDomain ball = ConvexDomain::ball(x0, R);
  const StochasticGradientOracle stochastic = family.stochastic_oracle();
  const SimpleRegularizer zero(0.0, x0);
  const CompositeObjective objective{stochastic, zero, ball, mu};
  const FirstOrderOracle full = family.full_oracle();

  auto ellipsoid_level = [&](int j) {
    return ellipsoid(x0, full, R, mu, G, unbiased_ellipsoid_budget(j)).point;
  };
  Vector x_prev, x_J;
  if (unbiased_level_method(J, threshold) == LevelMethod::EpochSgd) {
    const std::vector<Vector> levels = epoch_sgd_levels(objective, J, rng, config.sgd);
    x_prev = levels[J - 1];
    x_J = levels[J];
  } else {
    x_prev = unbiased_level_method(J - 1, threshold) == LevelMethod::EpochSgd
                 ? epoch_sgd(objective, std::int64_t{1} << (J - 1), rng, config.sgd)
                 : ellipsoid_level(J - 1);
    x_J = ellipsoid_level(J);
  }
  OptEstimate out;
  out.point = unbiased_combine(J, x0, x_prev, x_J);
  out.levels_drawn.push_back(J);
  out.queries = family.queries() - before;
  return out;
}

OptEstimate unbiased_opt_est(const FiniteSumFamily& family, const Vector& x0, double R, double mu, double G, Rng& rng,
                             const UnbiasedConfig& config) {
  return unbiased_opt_est_at_level(family, x0, R, mu, G, rng.geometric_half(config.geometric_cap), rng, config);
}

}  // namespace mlmc
