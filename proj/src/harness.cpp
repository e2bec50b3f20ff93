#include "mlmc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "mlmc/error.hpp"

namespace mlmc {

int worker_count() {
  if (const char* env = std::getenv("MLMC_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw InvalidInput(std::string("MLMC_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body) {
  const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), std::max<std::int64_t>(count, 1)));
  if (workers <= 1) {
    for (std::int64_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t k = next++; k < count; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

EstimateStats summarize(const std::vector<Vector>& points, const std::vector<double>& queries, const Vector& x_star) {
  const auto M = static_cast<std::int64_t>(points.size());
  require(M >= 2, "need at least two replications");
  require(static_cast<std::int64_t>(queries.size()) == M, "query list size mismatch");
  require(x_star.allFinite(), "x_star must be finite");
  const double m = static_cast<double>(M);
  EstimateStats s;
  s.replications = M;
  s.mean = Vector::Zero(x_star.size());
  for (const Vector& p : points) s.mean += p;
  s.mean /= m;
  const Vector bias = s.mean - x_star;
  s.bias_norm = bias.norm();

  Matrix cov = Matrix::Zero(x_star.size(), x_star.size());
  double spread_sum = 0.0, spread_sq = 0.0, err_sum = 0.0, err_sq = 0.0;
  for (const Vector& p : points) {
    const Vector c = p - s.mean;
    cov.noalias() += c * c.transpose();
    const double spread = c.squaredNorm();
    spread_sum += spread;
    spread_sq += spread * spread;
    const double err = (p - x_star).squaredNorm();
    err_sum += err;
    err_sq += err * err;
  }
  cov /= m - 1.0;
  s.variance = cov.trace();
  const double spread_mean = spread_sum / m;
  s.variance_se = std::sqrt(std::max(0.0, spread_sq / m - spread_mean * spread_mean) / m) * m / (m - 1.0);
  s.mse = err_sum / m;
  s.mse_se = std::sqrt(std::max(0.0, err_sq / m - s.mse * s.mse) / (m - 1.0));
  // Delta method for the norm; at zero bias fall back to the root mean variance.
  if (s.bias_norm > 0.0) {
    const Vector u = bias / s.bias_norm;
    s.bias_se = std::sqrt(std::max(0.0, u.dot(cov * u)) / m);
  } else {
    s.bias_se = std::sqrt(s.variance / m);
  }
  double q_sum = 0.0;
  for (double q : queries) q_sum += q;
  s.mean_queries = q_sum / m;
  double q_dev = 0.0;
  for (double q : queries) q_dev += (q - s.mean_queries) * (q - s.mean_queries);
  s.queries_se = std::sqrt(q_dev / (m - 1.0) / m);
  return s;
}

EstimateStats measure_estimator(const EstimateFactory& factory, const Vector& x_star, std::int64_t M,
                                std::uint64_t seed) {
  require(M >= 2, "need at least two replications");
  require(x_star.allFinite(), "x_star must be finite");
  std::vector<Vector> points(static_cast<std::size_t>(M));
  std::vector<double> queries(static_cast<std::size_t>(M));
  const Rng root(seed);
  parallel_for(M, [&](std::int64_t k) {
    Rng rng = root.split(static_cast<std::uint64_t>(k));
    OptEstimate e = factory(rng);
    points[static_cast<std::size_t>(k)] = std::move(e.point);
    queries[static_cast<std::size_t>(k)] = static_cast<double>(e.queries);
  });
  return summarize(points, queries, x_star);
}

double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 3, "slope fit needs at least three points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [scale, value] : points) {
    require(scale > 0.0 && value > 0.0 && std::isfinite(scale) && std::isfinite(value),
            "slope fit needs positive finite points");
    sx += std::log(scale);
    sy += std::log(value);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [scale, value] : points) {
    const double dx = std::log(scale) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(value) - my);
  }
  require(sxx > 0.0, "slope fit needs at least two distinct scales");
  return sxy / sxx;
}

CappedRun budget_cap(const std::function<Vector()>& run, QueryCounter& counter, std::int64_t cap,
                     const Vector& fallback) {
  require(cap >= 0, "query cap must be nonnegative");
  const std::int64_t previous = counter.limit();
  const std::int64_t start = counter.count();
  const std::int64_t room = QueryCounter::kUnlimited - start;
  counter.set_limit(std::min(previous, cap >= room ? QueryCounter::kUnlimited : start + cap));
  CappedRun out;
  try {
    out.point = run();
  } catch (const BudgetExceeded&) {
    out.point = fallback;
    out.capped = true;
  } catch (...) {
    counter.set_limit(previous);
    throw;
  }
  counter.set_limit(previous);
  out.queries = counter.count() - start;
  return out;
}

}  // namespace mlmc
