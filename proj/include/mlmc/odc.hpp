#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlmc/domain.hpp"
#include "mlmc/ellipsoid.hpp"
#include "mlmc/linalg.hpp"
#include "mlmc/oracle.hpp"
#include "mlmc/regularizer.hpp"
#include "mlmc/rng.hpp"

namespace mlmc {

// F = f + psi over a domain, mu-strongly convex. Holds references; the
// referenced objects must outlive it.
struct CompositeObjective {
  const StochasticGradientOracle& oracle;
  const SimpleRegularizer& psi;
  const ConvexDomain& domain;
  double mu;
};

struct EpochSgdConfig {
  std::int64_t first_epoch_length = 16;
  // eta_1 = first_step_scale / mu.
  double first_step_scale = 0.25;
};

struct EpochState {
  int k = 1;
  double eta = 0.0;
  std::int64_t length = 0;
  Vector iterate;
};

double epoch_sgd_step_size(int k, double mu, const EpochSgdConfig& config = {});
std::int64_t epoch_sgd_epoch_length(int k, const EpochSgdConfig& config = {});
// Number of complete epochs that fit in a budget of T queries.
int epoch_sgd_epochs(std::int64_t T, const EpochSgdConfig& config = {});

struct EpochSgdRun {
  Vector output;
  // epoch_starts[k] = x_{k+1}^0; epoch_starts[0] = argmin psi.
  std::vector<Vector> epoch_starts;
  std::int64_t queries = 0;
};

EpochSgdRun epoch_sgd_run(const CompositeObjective& objective, std::int64_t T, Rng& rng,
                          const EpochSgdConfig& config = {}, bool keep_epoch_starts = false);
Vector epoch_sgd(const CompositeObjective& objective, std::int64_t T, Rng& rng, const EpochSgdConfig& config = {});

// One epoch from start with fixed step and length; returns the average of
// x^1..x^length.
Vector run_epoch(const CompositeObjective& objective, const Vector& start, double eta, std::int64_t length, Rng& rng);

// Iterates x_0..x_max_level with x_j = EpochSGD(2^j), read from a single run
// of budget 2^max_level.
std::vector<Vector> epoch_sgd_levels(const CompositeObjective& objective, int max_level, Rng& rng,
                                     const EpochSgdConfig& config = {});

struct OdcSolver {
  std::string name;
  double constant = 32.0;
  std::function<Vector(const CompositeObjective&, std::int64_t T, Rng&)> solve;
  // Optional: x_0..x_max_level from one run, each distributed as solve(2^j).
  std::function<std::vector<Vector>(const CompositeObjective&, int max_level, Rng&)> solve_levels;
};

OdcSolver epoch_sgd_solver(const EpochSgdConfig& config = {});

}  // namespace mlmc
