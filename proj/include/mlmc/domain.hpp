#pragma once

#include <memory>
#include <string>
#include <variant>

#include "mlmc/linalg.hpp"

namespace mlmc {

// Closed convex set with exact Euclidean projection.
class ConvexDomain {
 public:
  enum class Kind { WholeSpace, Ball, Box, Simplex, BallIntersection };

  static ConvexDomain whole_space(int dimension);
  static ConvexDomain ball(Vector center, double radius);
  static ConvexDomain box(Vector lower, Vector upper);
  static ConvexDomain simplex(int dimension, double total = 1.0);
  // ball(center, radius) intersected with inner.
  static ConvexDomain intersect_ball(Vector center, double radius, const ConvexDomain& inner);

  Kind kind() const;
  int dimension() const { return dimension_; }
  std::string describe() const;

  // Validating projection; throws InvalidInput on non-finite input.
  Vector project(const Vector& x) const;
  // Unchecked in-place projection for inner loops.
  void project_inplace(Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-9) const;

  // Ball accessors (Ball and BallIntersection kinds).
  const Vector& ball_center() const;
  double ball_radius() const;
  const ConvexDomain& inner() const;
  const Vector& box_lower() const;
  const Vector& box_upper() const;
  double simplex_total() const;

 private:
  struct WholeSpace {};
  struct Ball {
    Vector center;
    double radius;
  };
  struct Box {
    Vector lower, upper;
  };
  struct Simplex {
    double total;
  };
  struct Intersection {
    Ball ball;
    std::shared_ptr<const ConvexDomain> inner;
  };

  ConvexDomain(int dimension, std::variant<WholeSpace, Ball, Box, Simplex, Intersection> shape)
      : dimension_(dimension), shape_(std::move(shape)) {}

  void project_intersection(const Intersection& s, Vector& x) const;

  int dimension_;
  std::variant<WholeSpace, Ball, Box, Simplex, Intersection> shape_;
};

void project_onto_simplex(Vector& x, double total);

}  // namespace mlmc
