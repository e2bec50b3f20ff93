#include "mlmc/odc.hpp"

#include "mlmc/error.hpp"

namespace mlmc {

namespace {

void validate(const CompositeObjective& objective, std::int64_t T) {
  require(objective.mu > 0.0 && std::isfinite(objective.mu), "strong convexity mu must be positive");
  require(T >= 1, "query budget must be at least 1");
  require(objective.oracle.dimension() == objective.domain.dimension() &&
              objective.psi.dimension() == objective.domain.dimension(),
          "objective dimension mismatch");
}

// Runs one epoch in place: x0 is the epoch start on entry and the epoch
// average on exit.
void epoch_in_place(const CompositeObjective& objective, Vector& x0, double eta, std::int64_t length, Rng& rng,
                    Vector& x, Vector& next, Vector& g, Vector& sum) {
  g.setZero();
  objective.psi.prox_step_into(g, x0, eta, objective.domain, x);
  sum = x;
  for (std::int64_t t = 1; t < length; ++t) {
    objective.oracle.sample_into(x, rng, g);
    objective.psi.prox_step_into(g, x, eta, objective.domain, next);
    x.swap(next);
    sum += x;
  }
  x0 = sum / static_cast<double>(length);
}

}  // namespace

double epoch_sgd_step_size(int k, double mu, const EpochSgdConfig& config) {
  require(k >= 1 && mu > 0.0, "epoch index and mu must be positive");
  return std::ldexp(config.first_step_scale / mu, -(k - 1));
}

std::int64_t epoch_sgd_epoch_length(int k, const EpochSgdConfig& config) {
  require(k >= 1 && k < 62, "epoch index out of range");
  return config.first_epoch_length << (k - 1);
}

int epoch_sgd_epochs(std::int64_t T, const EpochSgdConfig& config) {
  int epochs = 0;
  std::int64_t used = 0;
  std::int64_t length = config.first_epoch_length;
  while (length <= T - used) {
    used += length;
    length *= 2;
    ++epochs;
  }
  return epochs;
}

EpochSgdRun epoch_sgd_run(const CompositeObjective& objective, std::int64_t T, Rng& rng,
                          const EpochSgdConfig& config, bool keep_epoch_starts) {
  validate(objective, T);
  require(config.first_epoch_length >= 1 && config.first_step_scale > 0.0, "invalid EpochSGD configuration");
  const std::int64_t before = objective.oracle.queries();
  const auto d = objective.domain.dimension();
  EpochSgdRun run;
  Vector x0 = objective.psi.argmin(objective.domain);
  if (keep_epoch_starts) run.epoch_starts.push_back(x0);
  Vector x(d), next(d), g(d), sum(d);
  double eta = config.first_step_scale / objective.mu;
  std::int64_t length = config.first_epoch_length;
  std::int64_t used = 0;
  while (length <= T - used) {
    epoch_in_place(objective, x0, eta, length, rng, x, next, g, sum);
    if (keep_epoch_starts) run.epoch_starts.push_back(x0);
    used += length;
    length *= 2;
    eta *= 0.5;
  }
  run.output = std::move(x0);
  run.queries = objective.oracle.queries() - before;
  return run;
}

Vector epoch_sgd(const CompositeObjective& objective, std::int64_t T, Rng& rng, const EpochSgdConfig& config) {
  return epoch_sgd_run(objective, T, rng, config, false).output;
}

Vector run_epoch(const CompositeObjective& objective, const Vector& start, double eta, std::int64_t length,
                 Rng& rng) {
  require(eta > 0.0 && length >= 1, "epoch needs eta > 0 and length >= 1");
  const auto d = objective.domain.dimension();
  Vector x0 = start, x(d), next(d), g(d), sum(d);
  epoch_in_place(objective, x0, eta, length, rng, x, next, g, sum);
  return x0;
}

std::vector<Vector> epoch_sgd_levels(const CompositeObjective& objective, int max_level, Rng& rng,
                                     const EpochSgdConfig& config) {
  require(max_level >= 0 && max_level < 62, "level out of range");
  const EpochSgdRun run = epoch_sgd_run(objective, std::int64_t{1} << max_level, rng, config, true);
  std::vector<Vector> levels;
  levels.reserve(max_level + 1);
  for (int j = 0; j <= max_level; ++j) {
    levels.push_back(run.epoch_starts[epoch_sgd_epochs(std::int64_t{1} << j, config)]);
  }
  return levels;
}

OdcSolver epoch_sgd_solver(const EpochSgdConfig& config) {
  OdcSolver solver;
  solver.name = "epoch_sgd";
  solver.constant = 32.0;
  solver.solve = [config](const CompositeObjective& objective, std::int64_t T, Rng& rng) {
    return epoch_sgd(objective, T, rng, config);
  };
  solver.solve_levels = [config](const CompositeObjective& objective, int max_level, Rng& rng) {
    return epoch_sgd_levels(objective, max_level, rng, config);
  };
  return solver;
}

}  // namespace mlmc
