#include "mlmc/domain.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <vector>

#include "mlmc/error.hpp"

namespace mlmc {

ConvexDomain ConvexDomain::whole_space(int dimension) {
  require(dimension >= 1, "domain dimension must be positive");
  return ConvexDomain(dimension, WholeSpace{});
}

ConvexDomain ConvexDomain::ball(Vector center, double radius) {
  require(center.size() >= 1, "ball center must be nonempty");
  require(center.allFinite(), "ball center must be finite");
  require(radius >= 0.0 && std::isfinite(radius), "ball radius must be finite and nonnegative");
  const int d = static_cast<int>(center.size());
  return ConvexDomain(d, Ball{std::move(center), radius});
}

ConvexDomain ConvexDomain::box(Vector lower, Vector upper) {
  require(lower.size() == upper.size() && lower.size() >= 1, "box bounds size mismatch");
  require((lower.array() <= upper.array()).all(), "box lower bound exceeds upper bound");
  const int d = static_cast<int>(lower.size());
  return ConvexDomain(d, Box{std::move(lower), std::move(upper)});
}

ConvexDomain ConvexDomain::simplex(int dimension, double total) {
  require(dimension >= 1, "simplex dimension must be positive");
  require(total > 0.0 && std::isfinite(total), "simplex total must be positive");
  return ConvexDomain(dimension, Simplex{total});
}

ConvexDomain ConvexDomain::intersect_ball(Vector center, double radius, const ConvexDomain& inner) {
  require(center.size() == inner.dimension(), "intersection dimension mismatch");
  require(center.allFinite(), "ball center must be finite");
  require(radius >= 0.0, "ball radius must be nonnegative");
  if (inner.kind() == Kind::WholeSpace) return ball(std::move(center), radius);
  const int d = inner.dimension();
  return ConvexDomain(
      d, Intersection{Ball{std::move(center), radius}, std::make_shared<const ConvexDomain>(inner)});
}

ConvexDomain::Kind ConvexDomain::kind() const { return static_cast<Kind>(shape_.index()); }

std::string ConvexDomain::describe() const {
  std::ostringstream os;
  switch (kind()) {
    case Kind::WholeSpace: os << "R^" << dimension_; break;
    case Kind::Ball: os << "ball(r=" << ball_radius() << ")"; break;
    case Kind::Box: os << "box"; break;
    case Kind::Simplex: os << "simplex(" << simplex_total() << ")"; break;
    case Kind::BallIntersection: os << "ball(r=" << ball_radius() << ") & " << inner().describe(); break;
  }
  return os.str();
}

const Vector& ConvexDomain::ball_center() const {
  if (auto* b = std::get_if<Ball>(&shape_)) return b->center;
  if (auto* s = std::get_if<Intersection>(&shape_)) return s->ball.center;
  throw InvalidInput("domain has no ball component");
}

double ConvexDomain::ball_radius() const {
  if (auto* b = std::get_if<Ball>(&shape_)) return b->radius;
  if (auto* s = std::get_if<Intersection>(&shape_)) return s->ball.radius;
  throw InvalidInput("domain has no ball component");
}

const ConvexDomain& ConvexDomain::inner() const {
  if (auto* s = std::get_if<Intersection>(&shape_)) return *s->inner;
  throw InvalidInput("domain is not an intersection");
}

const Vector& ConvexDomain::box_lower() const { return std::get<Box>(shape_).lower; }
const Vector& ConvexDomain::box_upper() const { return std::get<Box>(shape_).upper; }
double ConvexDomain::simplex_total() const { return std::get<Simplex>(shape_).total; }

Vector ConvexDomain::project(const Vector& x) const {
  require(x.size() == dimension_, "projection dimension mismatch");
  require(x.allFinite(), "projection input must be finite");
  Vector out = x;
  project_inplace(out);
  return out;
}

namespace {

void project_ball(Vector& x, const Vector& center, double radius) {
  const double dist = (x - center).norm();
  if (dist > radius) x = center + (radius / dist) * (x - center);
}

}  // namespace

void project_onto_simplex(Vector& x, double total) {
  const Eigen::Index n = x.size();
  std::vector<double> u(x.data(), x.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - total) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  x = (x.array() - tau).max(0.0);
}

void ConvexDomain::project_inplace(Vector& x) const {
  switch (kind()) {
    case Kind::WholeSpace:
      return;
    case Kind::Ball: {
      const auto& b = std::get<Ball>(shape_);
      project_ball(x, b.center, b.radius);
      return;
    }
    case Kind::Box: {
      const auto& b = std::get<Box>(shape_);
      x = x.cwiseMax(b.lower).cwiseMin(b.upper);
      return;
    }
    case Kind::Simplex:
      project_onto_simplex(x, std::get<Simplex>(shape_).total);
      return;
    case Kind::BallIntersection:
      project_intersection(std::get<Intersection>(shape_), x);
      return;
  }
}

// Projection onto C & ball(c, r). For theta >= 0 the point
// x(theta) = Proj_C((z + theta c) / (1 + theta)) minimizes the Lagrangian
// of the ball constraint; ||x(theta) - c|| is nonincreasing in theta, so the
// multiplier is found by bisection.
void ConvexDomain::project_intersection(const Intersection& s, Vector& z) const {
  const Vector& c = s.ball.center;
  const double r = s.ball.radius;
  Vector x = z;
  s.inner->project_inplace(x);
  if ((x - c).squaredNorm() <= r * r) {
    z = x;
    return;
  }
  Vector trial(z.size());
  auto evaluate = [&](double theta) {
    trial = (z + theta * c) / (1.0 + theta);
    s.inner->project_inplace(trial);
    return (trial - c).norm();
  };
  double lo = 0.0;
  double hi = 1.0;
  while (evaluate(hi) > r) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) {
      if (evaluate(hi) > r * (1.0 + 1e-9) + 1e-12) throw InvalidInput("empty ball intersection");
      break;
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (evaluate(mid) > r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  evaluate(hi);
  z = trial;
}

bool ConvexDomain::contains(const Vector& x, double tol) const {
  if (x.size() != dimension_ || !x.allFinite()) return false;
  switch (kind()) {
    case Kind::WholeSpace:
      return true;
    case Kind::Ball: {
      const auto& b = std::get<Ball>(shape_);
      return (x - b.center).norm() <= b.radius + tol;
    }
    case Kind::Box: {
      const auto& b = std::get<Box>(shape_);
      return ((x - b.lower).array() >= -tol).all() && ((b.upper - x).array() >= -tol).all();
    }
    case Kind::Simplex:
      return (x.array() >= -tol).all() && std::abs(x.sum() - simplex_total()) <= tol * x.size();
    case Kind::BallIntersection: {
      const auto& s = std::get<Intersection>(shape_);
      return (x - s.ball.center).norm() <= s.ball.radius + tol && s.inner->contains(x, tol);
    }
  }
  return false;
}

}  // namespace mlmc
