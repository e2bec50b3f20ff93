#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "mlmc/estimators.hpp"

namespace mlmc {

struct EstimateStats {
  std::int64_t replications = 0;
  Vector mean;
  double bias_norm = 0.0;
  double bias_se = 0.0;
  // Trace of the sample covariance (denominator M - 1).
  double variance = 0.0;
  double variance_se = 0.0;
  // Mean of ||x - x_star||^2.
  double mse = 0.0;
  double mse_se = 0.0;
  double mean_queries = 0.0;
  double queries_se = 0.0;
};

using EstimateFactory = std::function<OptEstimate(Rng& rng)>;

// Worker count from MLMC_WORKERS (default: hardware concurrency, at least 1).
int worker_count();

// M draws, draw k using Rng(seed).split(k). Draws may run on several
// workers; results are reduced in index order, so the statistics depend
// only on (factory, M, seed).
EstimateStats measure_estimator(const EstimateFactory& factory, const Vector& x_star, std::int64_t M,
                                std::uint64_t seed);

// Statistics of given samples (same formulas as measure_estimator).
EstimateStats summarize(const std::vector<Vector>& points, const std::vector<double>& queries, const Vector& x_star);

// Runs body(k) for k in [0, count) across worker_count() threads.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body);

// Least-squares slope of log(value) against log(scale).
double fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

struct CappedRun {
  Vector point;
  bool capped = false;
  std::int64_t queries = 0;
};

// Runs the algorithm with the counter limited to cap further queries; if the
// limit is hit the run is abandoned and fallback is returned. The counter's
// previous limit is restored afterwards.
CappedRun budget_cap(const std::function<Vector()>& run, QueryCounter& counter, std::int64_t cap,
                     const Vector& fallback);

}  // namespace mlmc
