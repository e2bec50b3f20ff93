#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "mlmc/linalg.hpp"
#include "mlmc/rng.hpp"

namespace mlmc {

// Monotone query counter. Counters may be chained to a parent so that a
// per-module count and a global count advance together; an increment that
// would pass the limit of any counter in the chain throws BudgetExceeded
// before anything is incremented.
class QueryCounter {
 public:
  static constexpr std::int64_t kUnlimited = std::numeric_limits<std::int64_t>::max();

  explicit QueryCounter(std::shared_ptr<QueryCounter> parent = nullptr) : parent_(std::move(parent)) {}

  void add(std::int64_t n = 1);
  std::int64_t count() const { return count_; }
  std::int64_t limit() const { return limit_; }
  void set_limit(std::int64_t limit) { limit_ = limit; }
  void clear_limit() { limit_ = kUnlimited; }
  const std::shared_ptr<QueryCounter>& parent() const { return parent_; }

 private:
  void check(std::int64_t n) const;

  std::int64_t count_ = 0;
  std::int64_t limit_ = kUnlimited;
  std::shared_ptr<QueryCounter> parent_;
};

inline std::shared_ptr<QueryCounter> make_counter(std::shared_ptr<QueryCounter> parent = nullptr) {
  return std::make_shared<QueryCounter>(std::move(parent));
}

// Unbiased stochastic subgradient oracle for f with E||g||^2 <= G^2.
class StochasticGradientOracle {
 public:
  using Sampler = std::function<void(const Vector& x, Rng& rng, Vector& out)>;

  StochasticGradientOracle(int dimension, double lipschitz_bound, Sampler sampler, bool deterministic = false,
                           std::shared_ptr<QueryCounter> counter = nullptr);

  int dimension() const { return dimension_; }
  double lipschitz_bound() const { return lipschitz_bound_; }
  // True when samples do not depend on the rng (exact subgradients).
  bool deterministic() const { return deterministic_; }

  // Validating sample; counts one query.
  Vector sample(const Vector& x, Rng& rng) const;
  // Unchecked sample into a preallocated vector; counts one query.
  void sample_into(const Vector& x, Rng& rng, Vector& out) const {
    counter_->add(1);
    sampler_(x, rng, out);
  }

  std::int64_t queries() const { return counter_->count(); }
  QueryCounter& counter() const { return *counter_; }
  const std::shared_ptr<QueryCounter>& counter_handle() const { return counter_; }

  // Same sampler, fresh counter (optionally chained to parent).
  StochasticGradientOracle with_counter(std::shared_ptr<QueryCounter> counter) const;

 private:
  int dimension_;
  double lipschitz_bound_;
  Sampler sampler_;
  bool deterministic_;
  std::shared_ptr<QueryCounter> counter_;
};


inline Vector sample_subgradient(const StochasticGradientOracle& oracle, const Vector& x, Rng& rng) {
  return oracle.sample(x, rng);
}

struct FirstOrderValue {
  double value = 0.0;
  Vector subgradient;
};

using FirstOrderOracle = std::function<FirstOrderValue(const Vector& x)>;

// F = (1/n) sum_i F_i with a first-order oracle per term. Every term
// evaluation counts one query.
class FiniteSumFamily {
 public:
  using Term = std::function<void(int i, const Vector& x, double& value, Vector& subgradient)>;

  FiniteSumFamily(int terms, int dimension, double lipschitz_bound, Term term,
                  std::shared_ptr<QueryCounter> counter = nullptr);

  int terms() const { return terms_; }
  int dimension() const { return dimension_; }
  double lipschitz_bound() const { return lipschitz_bound_; }
  std::int64_t queries() const { return counter_->count(); }
  const std::shared_ptr<QueryCounter>& counter_handle() const { return counter_; }

  FirstOrderValue evaluate_term(int i, const Vector& x) const;
  // Full average; n queries.
  FirstOrderValue evaluate(const Vector& x) const;
  FirstOrderOracle full_oracle() const;
  // Uniform index sampling; one query per sample, shared counter.
  StochasticGradientOracle stochastic_oracle() const;

 private:
  int terms_;
  int dimension_;
  double lipschitz_bound_;
  Term term_;
  std::shared_ptr<QueryCounter> counter_;
};

}  // namespace mlmc
