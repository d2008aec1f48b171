#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace diffk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Closed Euclidean ball.
struct Ball {
  Vector center;
  double radius = 1.0;
};

/// Bounded polytope { x : a_i . x <= b_i } with a certified interior point.
struct HPolytope {
  Matrix normals;  // one row per facet
  Vector offsets;
  Vector interior_point;
  double bounding_radius = 1.0;
};

/// Compact convex body with non-empty interior. Immutable after construction;
/// construction validates the interior point, the normals and boundedness.
class ConvexBody {
 public:
  static ConvexBody ball(Vector center, double radius);
  static ConvexBody hpolytope(Matrix normals, Vector offsets, Vector interior_point,
                              double bounding_radius);
  /// Axis-aligned box [lo, hi].
  static ConvexBody box(const Vector& lo, const Vector& hi);
  static ConvexBody interval(double lo, double hi);
  /// Standard simplex { x >= 0, sum x <= 1 } in dimension n.
  static ConvexBody simplex(int n);

  int dimension() const noexcept { return dim_; }
  bool is_ball() const noexcept { return std::holds_alternative<Ball>(shape_); }
  const Ball* as_ball() const noexcept { return std::get_if<Ball>(&shape_); }
  const HPolytope* as_polytope() const noexcept { return std::get_if<HPolytope>(&shape_); }

  /// A point strictly inside K (the ball center or the polytope certificate).
  const Vector& interior_point() const;
  /// Radius of a ball around interior_point() that contains K.
  double bounding_radius() const;

  /// Exact, non-strict membership test.
  bool contains(const Vector& x) const;
  /// d(x) = min over the boundary of |y - x|. Throws DomainError when x is not in K.
  double distance_to_boundary(const Vector& x) const;

  /// Facet slacks (b_i - a_i.x) / |a_i| for polytopes; a single entry r - |x - c|
  /// for balls. Evaluated in a fixed summation order so that constructed
  /// boundary points give exact zeros.
  Vector scaled_slacks(const Vector& x) const;

  /// Outward unit normals of the facets with zero slack at x (for a ball: the
  /// radial direction when |x - c| = r).
  std::vector<Vector> active_normals(const Vector& x, double slack_tol = 0.0) const;

  std::vector<Vector> sample_boundary(int m, std::uint64_t seed) const;
  std::vector<Vector> sample_interior(int m, std::uint64_t seed) const;

  friend bool operator==(const ConvexBody& a, const ConvexBody& b);

 private:
  ConvexBody(int dim, std::variant<Ball, HPolytope> shape);
  void check_dimension(const Vector& x) const;
  bool sample_facet_point(int facet, std::mt19937_64& rng, Vector& out) const;
  bool sample_sphere_point(std::mt19937_64& rng, Vector& out) const;

  int dim_ = 0;
  std::variant<Ball, HPolytope> shape_;
};

/// Euclidean norm evaluated in a fixed order (used wherever exact zeros matter).
double fixed_order_norm(const Vector& v);

ConvexBody body_from_json(const nlohmann::json& j);
nlohmann::json body_to_json(const ConvexBody& body);

}  // namespace diffk
