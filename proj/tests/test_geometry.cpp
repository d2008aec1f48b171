#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "diffk/errors.hpp"
#include "diffk/geometry.hpp"

using namespace diffk;

namespace {

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

ConvexBody unit_square() { return ConvexBody::box(v({0, 0}), v({1, 1})); }

// Brute-force oracle: min distance to a dense boundary sample.
double sampled_distance(const std::vector<Vector>& boundary, const Vector& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : boundary) best = std::min(best, (b - x).norm());
  return best;
}

}  // namespace

TEST_CASE("contains: unit square") {
  const auto sq = unit_square();
  CHECK(sq.contains(v({0.5, 0.5})));
  CHECK(sq.contains(v({1.0, 0.3})));
  CHECK_FALSE(sq.contains(v({1.1, 0.3})));
  CHECK_THROWS_AS(sq.contains(v({0.5})), DimensionError);
}

TEST_CASE("distance_to_boundary examples") {
  CHECK(unit_square().distance_to_boundary(v({0.3, 0.5})) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(ConvexBody::ball(v({0, 0}), 1.0).distance_to_boundary(v({0, 0})) == 1.0);

  const auto simplex = ConvexBody::simplex(2);
  const Vector x = v({0.25, 0.25});
  const Vector slacks = simplex.scaled_slacks(x);
  CHECK(slacks(0) == doctest::Approx(0.25));
  CHECK(slacks(1) == doctest::Approx(0.25));
  CHECK(slacks(2) == doctest::Approx(0.5 / std::sqrt(2.0)));
  CHECK(simplex.distance_to_boundary(x) == doctest::Approx(0.25).epsilon(1e-15));
  // independent check by dense boundary sampling
  CHECK(sampled_distance(simplex.sample_boundary(10000, 3), x) == doctest::Approx(0.25).epsilon(1e-2));

  CHECK_THROWS_AS(unit_square().distance_to_boundary(v({2.0, 0.5})), DomainError);
  CHECK(unit_square().distance_to_boundary(v({1.0, 0.5})) == 0.0);
}

TEST_CASE("sample_boundary") {
  SUBCASE("unit interval gives both endpoints") {
    const auto pts = ConvexBody::interval(0.0, 1.0).sample_boundary(2, 7);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0](0) == 0.0);
    CHECK(pts[1](0) == 1.0);
  }
  SUBCASE("square points lie on edges") {
    for (std::uint64_t seed : {1u, 2u, 99u}) {
      for (const auto& p : unit_square().sample_boundary(4, seed)) {
        CHECK(unit_square().contains(p));
        const bool on_edge = p(0) == 0.0 || p(0) == 1.0 || p(1) == 0.0 || p(1) == 1.0;
        CHECK(on_edge);
      }
    }
  }
  SUBCASE("sphere points have exact radius") {
    const auto ball = ConvexBody::ball(v({0, 0, 0}), 1.0);
    for (const auto& p : ball.sample_boundary(100, 5)) {
      CHECK(fixed_order_norm(p) == 1.0);
      CHECK(ball.distance_to_boundary(p) == 0.0);
    }
  }
  SUBCASE("general polytopes give exact zero distance") {
    for (const auto& body : {ConvexBody::simplex(2), ConvexBody::simplex(3),
                             ConvexBody::box(v({-1, 0, 2}), v({1, 0.5, 3}))}) {
      for (const auto& p : body.sample_boundary(500, 11)) CHECK(body.distance_to_boundary(p) == 0.0);
    }
  }
  SUBCASE("deterministic") {
    const auto a = ConvexBody::simplex(3).sample_boundary(20, 42);
    const auto b = ConvexBody::simplex(3).sample_boundary(20, 42);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("sample_interior") {
  const auto sq = unit_square();
  CHECK(sq.sample_interior(1, 3)[0] == sq.interior_point());
  for (const auto& p : sq.sample_interior(100, 3)) CHECK(sq.distance_to_boundary(p) > 0.0);
  const auto a = sq.sample_interior(50, 8);
  const auto b = sq.sample_interior(50, 8);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("construction validation") {
  Matrix a(2, 1);
  a << -1, 0;
  CHECK_THROWS_AS(ConvexBody::hpolytope(a, v({0, 1}), v({0.5}), 1.0), DomainError);  // zero normal
  Matrix half(1, 1);
  half << 1;
  CHECK_THROWS_AS(ConvexBody::hpolytope(half, v({1}), v({0.5}), 10.0), DomainError);  // unbounded
  Matrix unit(2, 1);
  unit << -1, 1;
  CHECK_THROWS_AS(ConvexBody::hpolytope(unit, v({0, 1}), v({1.0}), 1.0), DomainError);  // not strict
  CHECK_THROWS_AS(ConvexBody::hpolytope(unit, v({0, 1}), v({0.5}), 0.1), DomainError);  // radius too small
  CHECK_THROWS_AS(ConvexBody::ball(v({0}), 0.0), DomainError);
}

TEST_CASE("d is 1-Lipschitz and concave on segments") {
  for (const auto& body : {unit_square(), ConvexBody::simplex(3), ConvexBody::ball(v({1, -1}), 2.0)}) {
    const auto pts = body.sample_interior(200, 21);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vector& x = pts[i];
      const Vector& y = pts[i + 1];
      const double dx = body.distance_to_boundary(x);
      const double dy = body.distance_to_boundary(y);
      CHECK(std::abs(dx - dy) <= (x - y).norm() + 1e-15);
      CHECK(body.distance_to_boundary(0.5 * (x + y)) >= 0.5 * (dx + dy) - 1e-15);
    }
  }
}

TEST_CASE("distance agrees with brute-force boundary sampling") {
  struct Case {
    ConvexBody body;
    double tol;
  };
  const std::vector<Case> cases{{ConvexBody::ball(v({0, 0}), 1.0), 2e-3},
                                {unit_square(), 1e-2},
                                {ConvexBody::simplex(2), 1e-2},
                                {ConvexBody::interval(-1.0, 2.0), 1e-2},
                                {ConvexBody::box(v({0, 0, 0}), v({1, 1, 1})), 1e-2},
                                {ConvexBody::simplex(3), 1e-2}};
  for (const auto& c : cases) {
    const auto boundary = c.body.sample_boundary(10000, 77);
    for (const auto& x : c.body.sample_interior(25, 4)) {
      // In 3D, 10^4 facet samples are ~0.02 apart, so points closer to the
      // boundary than that only resolve to the sample spacing.
      if (c.body.dimension() == 3 && c.body.distance_to_boundary(x) < 0.05) continue;
      CAPTURE(x.transpose());
      CHECK(std::abs(sampled_distance(boundary, x) - c.body.distance_to_boundary(x)) <= c.tol);
    }
  }
}

TEST_CASE("json descriptors") {
  const auto j = nlohmann::json::parse(
      R"({"type":"hpolytope","A":[[-1,0],[0,-1],[1,1]],"b":[0,0,1],"interior_point":[0.25,0.25],"bounding_radius":1})");
  const auto body = body_from_json(j);
  CHECK(body == ConvexBody::hpolytope(ConvexBody::simplex(2).as_polytope()->normals, v({0, 0, 1}),
                                      v({0.25, 0.25}), 1.0));
  CHECK(body_from_json(body_to_json(body)) == body);
  const auto ball = body_from_json(nlohmann::json::parse(R"({"type":"ball","center":[0,0],"radius":2})"));
  CHECK(ball.is_ball());
  CHECK(ball.bounding_radius() == 2.0);
  CHECK_THROWS_AS(body_from_json(nlohmann::json::parse(R"({"type":"torus"})")), DomainError);
}
