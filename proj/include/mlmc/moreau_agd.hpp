#pragma once

#include <cstdint>
#include <functional>

#include "mlmc/estimators.hpp"

namespace mlmc {

struct PeConfig {
  double lambda = 0.0;
  std::int64_t T = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double R = 0.0;
  double D = 0.0;
  // sigma_k^2 = 2 epsilon lambda / (k + 1) at iteration k >= 1.
  double sigma2(std::int64_t k) const { return 2.0 * epsilon * lambda / static_cast<double>(k + 1); }
};

// lambda = 2G^2/eps, T = ceil(7GD/eps), delta = eps/(8R).
PeConfig pe_params(double G, double D, double R, double epsilon);

struct PeState {
  std::int64_t k = 0;
  Vector x;
  Vector v;
  Vector y;
  std::int64_t projection_count = 0;
  std::int64_t queries = 0;
};

struct PeResult {
  Vector x;
  std::int64_t projections = 0;
  std::int64_t queries = 0;
};

struct PeOptions {
  OptEstOptions estimator;
  std::function<void(const PeState&)> observer;
};

// Accelerated gradient descent on the Moreau envelope f_lambda over X. The
// gradient estimator works over ball(0, R), so Proj_X is called once per
// iteration.
PeResult agd_moreau(const StochasticGradientOracle& oracle, const ConvexDomain& domain, const Vector& x0,
                    const PeConfig& config, Rng& rng, const PeOptions& options = {});

}  // namespace mlmc
