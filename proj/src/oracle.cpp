#include "mlmc/oracle.hpp"

#include "mlmc/error.hpp"

namespace mlmc {

void QueryCounter::check(std::int64_t n) const {
  for (const QueryCounter* c = this; c != nullptr; c = c->parent_.get()) {
    if (c->limit_ != kUnlimited && c->count_ + n > c->limit_) {
      throw BudgetExceeded("query budget of " + std::to_string(c->limit_) + " exceeded");
    }
  }
}

void QueryCounter::add(std::int64_t n) {
  if (n < 0) throw InvalidInput("query increments must be nonnegative");
  check(n);
  for (QueryCounter* c = this; c != nullptr; c = c->parent_.get()) c->count_ += n;
}

StochasticGradientOracle::StochasticGradientOracle(int dimension, double lipschitz_bound, Sampler sampler,
                                                   bool deterministic, std::shared_ptr<QueryCounter> counter)
    : dimension_(dimension),
      lipschitz_bound_(lipschitz_bound),
      sampler_(std::move(sampler)),
      deterministic_(deterministic),
      counter_(counter ? std::move(counter) : make_counter()) {
  require(dimension >= 1, "oracle dimension must be positive");
  require(lipschitz_bound >= 0.0 && std::isfinite(lipschitz_bound), "oracle bound G must be finite and >= 0");
  require(static_cast<bool>(sampler_), "oracle sampler must be set");
}

Vector StochasticGradientOracle::sample(const Vector& x, Rng& rng) const {
  require(x.size() == dimension_, "oracle query dimension mismatch");
  require(x.allFinite(), "oracle query point must be finite");
  Vector out(dimension_);
  sample_into(x, rng, out);
  return out;
}

StochasticGradientOracle StochasticGradientOracle::with_counter(std::shared_ptr<QueryCounter> counter) const {
  return StochasticGradientOracle(dimension_, lipschitz_bound_, sampler_, deterministic_,
                                  counter ? std::move(counter) : make_counter());
}

FiniteSumFamily::FiniteSumFamily(int terms, int dimension, double lipschitz_bound, Term term,
                                 std::shared_ptr<QueryCounter> counter)
    : terms_(terms),
      dimension_(dimension),
      lipschitz_bound_(lipschitz_bound),
      term_(std::move(term)),
      counter_(counter ? std::move(counter) : make_counter()) {
  require(terms >= 1 && dimension >= 1, "finite sum needs at least one term and dimension");
}

FirstOrderValue FiniteSumFamily::evaluate_term(int i, const Vector& x) const {
  counter_->add(1);
  FirstOrderValue out;
  out.subgradient.resize(dimension_);
  term_(i, x, out.value, out.subgradient);
  return out;
}

FirstOrderValue FiniteSumFamily::evaluate(const Vector& x) const {
  counter_->add(terms_);
  FirstOrderValue out{0.0, Vector::Zero(dimension_)};
  Vector g(dimension_);
  for (int i = 0; i < terms_; ++i) {
    double v = 0.0;
    term_(i, x, v, g);
    out.value += v;
    out.subgradient += g;
  }
  out.value /= terms_;
  out.subgradient /= terms_;
  return out;
}

FirstOrderOracle FiniteSumFamily::full_oracle() const {
  return [family = *this](const Vector& x) { return family.evaluate(x); };
}

StochasticGradientOracle FiniteSumFamily::stochastic_oracle() const {
  auto sampler = [term = term_, n = terms_](const Vector& x, Rng& rng, Vector& out) {
    double value = 0.0;
    term(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), x, value, out);
  };
  return StochasticGradientOracle(dimension_, lipschitz_bound_, sampler, terms_ == 1, counter_);
}

}  // namespace mlmc
