#pragma once

#include <cstdint>
#include <functional>

#include "mlmc/domain.hpp"
#include "mlmc/linalg.hpp"
#include "mlmc/oracle.hpp"

namespace mlmc {

// E = {x : (x - c)^T P^{-1} (x - c) <= 1} with central cuts. Dimension one
// is handled as an interval (the general update is undefined for d = 1).
class EllipsoidState {
 public:
  EllipsoidState(Vector center, double radius);

  const Vector& center() const { return center_; }
  const Matrix& shape() const { return shape_; }
  int dimension() const { return static_cast<int>(center_.size()); }

  // Keep the half {x : <g, x - c> <= 0}. Throws NumericFailure when g^T P g
  // is not a positive finite number.
  void cut(const Vector& g);
  bool contains(const Vector& x, double tol = 1e-9) const;
  // Upper bound on the largest semi-axis.
  double radius_bound() const { return std::sqrt(std::max(0.0, shape_.trace())); }
  std::int64_t cuts() const { return cuts_; }

 private:
  Vector center_;
  Matrix shape_;
  std::int64_t cuts_ = 0;
};

struct EllipsoidResult {
  Vector point;
  std::int64_t queries = 0;
  std::int64_t iterations = 0;
  bool early_exit = false;
};

using EllipsoidObserver = std::function<void(const EllipsoidState&)>;

// Minimizes a mu-strongly convex, G-Lipschitz f over ball(x0, R) with at most
// T first-order queries. Centers outside the ball get a free feasibility cut.
// Returns the best queried center by value.
EllipsoidResult ellipsoid(const Vector& x0, const FirstOrderOracle& oracle, double R, double mu, double G,
                          std::int64_t T, const EllipsoidObserver& observer = nullptr);

// (8 G^2 / mu^2) exp(-T / (2 d^2)).
double ellipsoid_error_bound(double G, double mu, int d, std::int64_t T);

// High-accuracy reference minimizer of a strongly convex function over a
// full-dimensional domain: central cuts until the localizing ellipsoid has
// every semi-axis below tol, so the returned point is within tol of the
// minimizer. Starts from ball(center, radius), which must contain it.
Vector certified_minimize(const FirstOrderOracle& oracle, const ConvexDomain& domain, const Vector& center,
                          double radius, double tol, std::int64_t max_iterations = 5'000'000);

}  // namespace mlmc
