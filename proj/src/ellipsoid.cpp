#include "mlmc/ellipsoid.hpp"

#include <limits>
#include <sstream>

#include "mlmc/error.hpp"

namespace mlmc {

EllipsoidState::EllipsoidState(Vector center, double radius) : center_(std::move(center)) {
  require(center_.size() >= 1 && center_.allFinite(), "ellipsoid center must be finite");
  require(radius > 0.0 && std::isfinite(radius), "ellipsoid radius must be positive");
  const auto d = center_.size();
  shape_ = Matrix::Identity(d, d) * (radius * radius);
}

void EllipsoidState::cut(const Vector& g) {
  const auto n = center_.size();
  if (n == 1) {
    const double half_width = std::sqrt(shape_(0, 0));
    if (!std::isfinite(g(0)) || g(0) == 0.0 || !(half_width > 0.0)) {
      throw NumericFailure("degenerate interval cut");
    }
    center_(0) -= (g(0) > 0.0 ? 0.5 : -0.5) * half_width;
    shape_(0, 0) *= 0.25;
    ++cuts_;
    return;
  }
  const Vector pg = shape_ * g;
  const double gpg = g.dot(pg);
  if (!std::isfinite(gpg) || gpg <= 0.0) {
    std::ostringstream os;
    os << "ellipsoid shape matrix became singular after " << cuts_ << " cuts (g^T P g = " << gpg
       << ", trace P = " << shape_.trace() << ")";
    throw NumericFailure(os.str());
  }
  const double nd = static_cast<double>(n);
  const Vector step = pg / std::sqrt(gpg);
  center_ -= step / (nd + 1.0);
  shape_ = (nd * nd / (nd * nd - 1.0)) * (shape_ - (2.0 / (nd + 1.0)) * step * step.transpose());
  shape_ = 0.5 * (shape_ + shape_.transpose()).eval();
  ++cuts_;
}

bool EllipsoidState::contains(const Vector& x, double tol) const {
  const Vector diff = x - center_;
  const double q = diff.dot(shape_.ldlt().solve(diff));
  return q <= 1.0 + tol;
}

double ellipsoid_error_bound(double G, double mu, int d, std::int64_t T) {
  require(mu > 0.0 && d >= 1 && T >= 0, "invalid ellipsoid bound arguments");
  return 8.0 * G * G / (mu * mu) * std::exp(-static_cast<double>(T) / (2.0 * d * d));
}

EllipsoidResult ellipsoid(const Vector& x0, const FirstOrderOracle& oracle, double R, double mu, double G,
                          std::int64_t T, const EllipsoidObserver& observer) {
  require(x0.size() >= 1 && x0.allFinite(), "ellipsoid start must be finite");
  require(R > 0.0 && mu > 0.0 && G >= 0.0, "ellipsoid needs R, mu > 0 and G >= 0");
  require(T >= 0, "ellipsoid budget must be nonnegative");
  EllipsoidState state(x0, R);
  EllipsoidResult result;
  result.point = x0;
  double best_value = std::numeric_limits<double>::infinity();
  const std::int64_t iteration_cap = 16 * T + 1024;
  if (observer) observer(state);
  while (result.queries < T && result.iterations < iteration_cap) {
    ++result.iterations;
    const Vector offset = state.center() - x0;
    const double dist = offset.norm();
    if (dist > R) {
      state.cut(offset);
      if (observer) observer(state);
      continue;
    }
    const FirstOrderValue f = oracle(state.center());
    ++result.queries;
    if (!std::isfinite(f.value) || !f.subgradient.allFinite()) {
      throw NumericFailure("ellipsoid oracle returned a non-finite value");
    }
    if (f.value < best_value) {
      best_value = f.value;
      result.point = state.center();
    }
    if (f.subgradient.squaredNorm() == 0.0) {
      result.point = state.center();
      result.early_exit = true;
      return result;
    }
    state.cut(f.subgradient);
    if (observer) observer(state);
  }
  return result;
}

Vector certified_minimize(const FirstOrderOracle& oracle, const ConvexDomain& domain, const Vector& center,
                          double radius, double tol, std::int64_t max_iterations) {
  require(tol > 0.0, "certification tolerance must be positive");
  if (!(radius > 0.0)) return domain.project(center);
  // Start from center shifted by a small irrational offset, inside a ball
  // enlarged to contain ball(center, radius).
  Vector shifted = center;
  for (Eigen::Index i = 0; i < shifted.size(); ++i) {
    shifted(i) += 1e-3 * radius * std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0) /
                  std::sqrt(static_cast<double>(shifted.size()));
  }
  EllipsoidState state(shifted, radius * (1.0 + 1e-3));
  Vector projected(center.size());
  for (std::int64_t it = 0; it < max_iterations; ++it) {
    if (state.radius_bound() <= tol) return domain.project(state.center());
    projected = state.center();
    domain.project_inplace(projected);
    const Vector gap = state.center() - projected;
    if (gap.norm() > 1e-15 * (1.0 + projected.norm())) {
      state.cut(gap);
      continue;
    }
    const FirstOrderValue f = oracle(state.center());
    if (f.subgradient.squaredNorm() == 0.0) return projected;
    state.cut(f.subgradient);
  }
  throw NumericFailure("certified minimization did not reach the requested tolerance");
}

}  // namespace mlmc
