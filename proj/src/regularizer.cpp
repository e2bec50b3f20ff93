#include "mlmc/regularizer.hpp"

#include "mlmc/error.hpp"

namespace mlmc {

SimpleRegularizer::SimpleRegularizer(double weight, Vector center, Vector linear)
    : weight_(weight), center_(std::move(center)), linear_(std::move(linear)) {
  require(weight >= 0.0 && std::isfinite(weight), "regularizer weight must be finite and >= 0");
  require(center_.size() >= 1 && center_.allFinite(), "regularizer center must be finite");
  if (linear_.size() == 0) linear_ = Vector::Zero(center_.size());
  require(linear_.size() == center_.size() && linear_.allFinite(), "regularizer linear term mismatch");
  has_linear_ = linear_.squaredNorm() > 0.0;
}

SimpleRegularizer SimpleRegularizer::zero(int dimension) { return SimpleRegularizer(0.0, Vector::Zero(dimension)); }

SimpleRegularizer SimpleRegularizer::quadratic(double weight, Vector center) {
  return SimpleRegularizer(weight, std::move(center));
}

double SimpleRegularizer::value(const Vector& x) const {
  return 0.5 * weight_ * (x - center_).squaredNorm() + linear_.dot(x);
}

Vector SimpleRegularizer::gradient(const Vector& x) const { return weight_ * (x - center_) + linear_; }

Vector SimpleRegularizer::argmin(const ConvexDomain& domain) const {
  require(domain.dimension() == dimension(), "regularizer/domain dimension mismatch");
  if (weight_ > 0.0) return domain.project(center_ - linear_ / weight_);
  require(!has_linear_, "argmin of a purely linear regularizer is unbounded");
  return domain.project(center_);
}

void SimpleRegularizer::prox_step_into(const Vector& u, const Vector& y, double eta, const ConvexDomain& domain,
                                       Vector& out) const {
  const double scaled = eta * weight_;
  if (has_linear_) {
    out = (y + scaled * center_ - eta * (u + linear_)) / (1.0 + scaled);
  } else {
    out = (y + scaled * center_ - eta * u) / (1.0 + scaled);
  }
  domain.project_inplace(out);
}

Vector SimpleRegularizer::prox_step(const Vector& u, const Vector& y, double eta, const ConvexDomain& domain) const {
  require(eta > 0.0, "prox step size must be positive");
  require(u.allFinite() && y.allFinite(), "prox step inputs must be finite");
  Vector out(y.size());
  prox_step_into(u, y, eta, domain, out);
  return out;
}

Vector composite_prox_step(const Vector& x, const Vector& g, const SimpleRegularizer& psi, double eta,
                           const ConvexDomain& domain) {
  return psi.prox_step(g, x, eta, domain);
}

}  // namespace mlmc
