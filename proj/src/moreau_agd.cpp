#include "mlmc/moreau_agd.hpp"

#include "mlmc/error.hpp"

namespace mlmc {

PeConfig pe_params(double G, double D, double R, double epsilon) {
  require(G > 0.0 && D > 0.0 && R > 0.0 && epsilon > 0.0, "G, D, R and epsilon must be positive");
  PeConfig c;
  c.lambda = 2.0 * G * G / epsilon;
  c.T = ceil_count(7.0 * G * D / epsilon);
  c.delta = epsilon / (8.0 * R);
  c.epsilon = epsilon;
  c.R = R;
  c.D = D;
  return c;
}

PeResult agd_moreau(const StochasticGradientOracle& oracle, const ConvexDomain& domain, const Vector& x0,
                    const PeConfig& config, Rng& rng, const PeOptions& options) {
  require(config.lambda > 0.0 && config.T >= 1 && config.delta > 0.0 && config.R > 0.0 && config.epsilon > 0.0,
          "invalid projection-efficient configuration");
  require(x0.size() == domain.dimension() && domain.contains(x0), "x0 must lie in X");
  const ConvexDomain outer = ConvexDomain::ball(Vector::Zero(domain.dimension()), config.R);
  const std::int64_t before = oracle.queries();
  PeState state;
  state.x = x0;
  state.v = x0;
  const double lambda = config.lambda;
  for (std::int64_t k = 1; k <= config.T; ++k) {
    const double kd = static_cast<double>(k);
    state.y = ((kd - 1.0) / (kd + 1.0)) * state.x + (2.0 / (kd + 1.0)) * state.v;
    const MorGradResult g =
        mor_grad_est(oracle, state.y, lambda, config.delta, config.sigma2(k), outer, rng, options.estimator);
    state.x = domain.project(state.y - g.gradient / (3.0 * lambda));
    ++state.projection_count;
    state.v -= (kd / (6.0 * lambda)) * g.gradient;
    outer.project_inplace(state.v);
    state.k = k;
    state.queries = oracle.queries() - before;
    if (options.observer) options.observer(state);
  }
  return PeResult{state.x, state.projection_count, oracle.queries() - before};
}

}  // namespace mlmc
