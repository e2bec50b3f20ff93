#pragma once

#include "mlmc/domain.hpp"
#include "mlmc/linalg.hpp"

namespace mlmc {

// psi(x) = (weight/2)||x - center||^2 + <linear, x>.
class SimpleRegularizer {
 public:
  SimpleRegularizer(double weight, Vector center, Vector linear = Vector());

  static SimpleRegularizer zero(int dimension);
  static SimpleRegularizer quadratic(double weight, Vector center);

  double weight() const { return weight_; }
  const Vector& center() const { return center_; }
  const Vector& linear() const { return linear_; }
  bool has_linear() const { return has_linear_; }
  int dimension() const { return static_cast<int>(center_.size()); }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  // argmin over the domain; requires weight > 0 or a zero linear term.
  Vector argmin(const ConvexDomain& domain) const;

  // argmin_{x in X} <u, x> + psi(x) + (1/(2 eta))||x - y||^2, written into out.
  void prox_step_into(const Vector& u, const Vector& y, double eta, const ConvexDomain& domain,
                      Vector& out) const;
  Vector prox_step(const Vector& u, const Vector& y, double eta, const ConvexDomain& domain) const;

 private:
  double weight_;
  Vector center_;
  Vector linear_;
  bool has_linear_;
};

// Proj_X((x + mu eta z - eta g) / (1 + mu eta)) for psi = (mu/2)||. - z||^2.
Vector composite_prox_step(const Vector& x, const Vector& g, const SimpleRegularizer& psi, double eta,
                           const ConvexDomain& domain);

}  // namespace mlmc
