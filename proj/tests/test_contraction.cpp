#include "doctest.h"

#include <cmath>
#include <random>

#include "diffk/contraction.hpp"
#include "diffk/errors.hpp"

using namespace diffk;

namespace {

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }
double logit(double y) { return std::log(y / (1.0 - y)); }

BoundaryVanishingField logistic(double c) {
  return BoundaryVanishingField(ConvexBody::interval(0.0, 1.0), {ScalarExpr::constant(c)}, Weight::slack());
}

ContractionFamily half_sine() {
  return {[](const Vector& p, const Vector& x) { return Vector(0.5 * p.array().sin() + 0.5 * x.array()); }, 0.5};
}

ContractionFamily affine09() {
  return {[](const Vector& p, const Vector& x) { return Vector(0.9 * x + p); }, 0.9};
}

ContractionFamily constant_map() {
  return {[](const Vector&, const Vector&) { return v({2.5}); }, 0.0};
}

// Independent oracle: re-solve at p +- h and difference the fixed points.
Matrix resolved_difference(const ContractionFamily& fam, const Vector& p, double h) {
  Matrix out(1, p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    Vector pp = p, pm = p;
    pp(k) += h;
    pm(k) -= h;
    const Vector xp = fixed_point(fam, pp, v({0.0}), 1e-15).point;
    const Vector xm = fixed_point(fam, pm, v({0.0}), 1e-15).point;
    out.col(k) = (xp - xm) / (2 * h);
  }
  return out;
}

}  // namespace

TEST_CASE("picard_solve: logistic closed form") {
  const auto curve = LieAlgebraCurve::over(logistic(0.3), 0.0, 1.0);
  const auto pb = picard_problem(curve, v({0.5}));
  CHECK(pb.radius == 0.25);
  const auto res = picard_solve(pb, 2048, 1e-13);
  CHECK(std::abs(res.final_state()(0) - sigmoid(0.3 + logit(0.5))) < 1e-6);
  CHECK(res.final_state()(0) == doctest::Approx(0.574443).epsilon(1e-6));
  CHECK(res.confinement_ok);
  CHECK(res.contraction_ratio <= pb.lipschitz + 1e-2);
  CHECK(res.residual <= 1e-12);
  CHECK(std::abs(picard_residual(pb, res) - res.residual) <= 1e-12);
  for (Eigen::Index i = 0; i < res.times.size(); i += 256) {
    CHECK(std::abs(res.states(0, i) - sigmoid(0.3 * res.times(i))) < 1e-6);
  }
}

TEST_CASE("picard_solve: trapezoid discretization error is O(N^-2)") {
  const auto curve = LieAlgebraCurve::over(logistic(0.3), 0.0, 1.0);
  const auto pb = picard_problem(curve, v({0.3}));
  const double exact = sigmoid(0.3 + logit(0.3));
  const double e1 = std::abs(picard_solve(pb, 64, 1e-15).final_state()(0) - exact);
  const double e2 = std::abs(picard_solve(pb, 128, 1e-15).final_state()(0) - exact);
  const double e3 = std::abs(picard_solve(pb, 256, 1e-15).final_state()(0) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("picard_solve: trivial trajectories") {
  SUBCASE("zero field") {
    const LieAlgebraCurve zero(BoundaryVanishingField::zero(ConvexBody::box(v({0, 0}), v({1, 1}))));
    const auto res = picard_solve(picard_problem(zero, v({0.3, 0.6})), 16);
    CHECK(res.iterations == 1);
    for (Eigen::Index i = 0; i < res.states.cols(); ++i) CHECK(res.states.col(i) == v({0.3, 0.6}));
  }
  SUBCASE("start on the boundary") {
    const auto curve = LieAlgebraCurve::over(logistic(0.3), 0.0, 1.0);
    for (double x0 : {0.0, 1.0}) {
      const auto res = picard_solve(picard_problem(curve, v({x0})), 64);
      for (Eigen::Index i = 0; i < res.states.cols(); ++i) CHECK(res.states(0, i) == x0);
    }
  }
}

TEST_CASE("picard_solve: certificate and argument errors") {
  PicardProblem pb;
  pb.rhs = [](double, const Vector& y) { return Vector(0.5 * y); };
  pb.x0 = v({1.0});
  pb.radius = 0.1;
  pb.lipschitz = 0.5;
  pb.sup_norm = 0.6;
  CHECK_THROWS_AS(picard_solve(pb, 16), CertificateError);
  pb.sup_norm = 0.05;
  pb.lipschitz = 1.0;
  CHECK_THROWS_AS(picard_solve(pb, 16), CertificateError);
  pb.lipschitz = 0.5;
  CHECK_THROWS_AS(picard_solve(pb, 4), DomainError);
  // the certificate lies: the true sup norm makes the state leave the ball
  CHECK_THROWS_AS(picard_solve(pb, 16), CertificateError);
  pb.radius = 1.0;
  pb.sup_norm = 1.0;
  CHECK_THROWS_AS(picard_solve(pb, 16, 1e-14, 2), ConvergenceError);
}

TEST_CASE("property: confinement for random certified fields") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& body : {ConvexBody::box(v({0, 0}), v({1, 1})), ConvexBody::ball(v({0, 0}), 1.0)}) {
    for (int rep = 0; rep < 6; ++rep) {
      std::vector<ScalarExpr> base;
      for (int i = 0; i < 2; ++i) {
        base.push_back(ScalarExpr::parse(std::to_string(u(rng)) + "+" + std::to_string(u(rng)) + "*sin(3*x" +
                                         std::to_string(i + 1) + "+t)"));
      }
      BoundaryVanishingField f(body, base, Weight::slack(), {0.0, 1.0}, {}, FieldOptions{5, 128, 3});
      const double scale = (1.0 / 3.0) / f.theta_bound();
      for (auto& e : base) e = ScalarExpr::parse(std::to_string(scale * 0.999) + "*(" + e.to_string() + ")");
      const LieAlgebraCurve curve(BoundaryVanishingField(body, base, Weight::slack(), {0.0, 1.0}, {},
                                                         FieldOptions{5, 128, 3}));
      for (const auto& x0 : body.sample_interior(10, 50 + rep)) {
        const auto pb = picard_problem(curve, x0);
        const auto res = picard_solve(pb, 128);
        CHECK(res.confinement_ok);
        CHECK(res.contraction_ratio <= pb.lipschitz + 1e-2);
      }
    }
  }
}

TEST_CASE("fixed_point examples") {
  CHECK(fixed_point(half_sine(), v({0.7}), v({0.0})).point(0) == doctest::Approx(std::sin(0.7)).epsilon(1e-11));
  CHECK(std::abs(fixed_point(half_sine(), v({0.7}), v({0.0}), 1e-9).point(0) - 0.644218) < 1e-6);
  const auto c = fixed_point(constant_map(), v({0.0}), v({-4.0}));
  CHECK(c.point(0) == 2.5);
  CHECK(c.iterations <= 2);
  CHECK(std::abs(fixed_point(affine09(), v({1.0}), v({0.0}), 1e-10).point(0) - 10.0) <= 1e-10);
}

TEST_CASE("fixed_point: uniqueness from distinct initial guesses") {
  const double tol = 1e-10;
  for (const auto& fam : {half_sine(), affine09()}) {
    const Vector a = fixed_point(fam, v({0.7}), v({-50.0}), tol).point;
    const Vector b = fixed_point(fam, v({0.7}), v({80.0}), tol).point;
    CHECK((a - b).norm() <= 2 * tol);
  }
}

TEST_CASE("fixed_point: broken certificates") {
  const ContractionFamily expanding{[](const Vector&, const Vector& x) { return Vector(2.0 * x + Vector::Ones(1)); },
                                    0.5};
  CHECK_THROWS_AS(fixed_point(expanding, v({0.0}), v({1.0})), CertificateError);
  CHECK_THROWS_AS(fixed_point(affine09(), v({1.0}), v({0.0}), 1e-12, 5), ConvergenceError);
  CHECK_THROWS_AS(fixed_point(ContractionFamily{affine09().map, 1.0}, v({1.0}), v({0.0})), CertificateError);
}

TEST_CASE("fixed_point_sensitivity") {
  const Vector p = v({0.7});
  const Matrix s1 = fixed_point_sensitivity(half_sine(), p, v({std::sin(0.7)}));
  CHECK(s1(0, 0) == doctest::Approx(std::cos(0.7)).epsilon(1e-8));
  CHECK(std::abs(s1(0, 0) - 0.764842) < 1e-6);
  const Matrix s2 = fixed_point_sensitivity(affine09(), v({1.0}), v({10.0}));
  CHECK(s2(0, 0) == doctest::Approx(10.0).epsilon(1e-8));
  const Matrix s3 = fixed_point_sensitivity(constant_map(), v({0.3}), v({2.5}));
  CHECK(s3(0, 0) == 0.0);

  // against re-solving the fixed point at p +- h
  for (const auto& [fam, pt] : {std::pair{half_sine(), v({0.7})}, std::pair{affine09(), v({1.0})},
                                std::pair{constant_map(), v({0.3})}}) {
    const Vector xp = fixed_point(fam, pt, v({0.0}), 1e-15).point;
    const Matrix mine = fixed_point_sensitivity(fam, pt, xp);
    const Matrix oracle = resolved_difference(fam, pt, 1e-4);
    CHECK((mine - oracle).norm() <= 1e-5 * std::max(1.0, oracle.norm()));
  }
}

TEST_CASE("fixed_point_sensitivity: 2D state, 2 parameters") {
  // f(p, x) = A x + (sin p1, p1 p2) with |A| < 1
  Matrix a(2, 2);
  a << 0.3, 0.1, -0.2, 0.4;
  const ContractionFamily fam{[a](const Vector& p, const Vector& x) {
                                return Vector(a * x + v({std::sin(p(0)), p(0) * p(1)}));
                              },
                              0.5};
  const Vector p = v({0.4, -1.2});
  const Vector xp = fixed_point(fam, p, v({0, 0}), 1e-15).point;
  const Matrix dp = (Matrix(2, 2) << std::cos(0.4), 0.0, -1.2, 0.4).finished();
  const Matrix exact = (Matrix::Identity(2, 2) - a).inverse() * dp;
  CHECK((fixed_point_sensitivity(fam, p, xp) - exact).norm() < 1e-8);
}

TEST_CASE("linear_family_inverse_derivative") {
  const auto one_d = [](const Vector& p) { return Matrix::Constant(1, 1, 1.0 + p(0)); };
  CHECK(linear_family_inverse_derivative(one_d, v({0.0}), v({1.0}), v({1.0}))(0) ==
        doctest::Approx(-1.0).epsilon(1e-9));
  const auto constant = [](const Vector&) { return Matrix::Identity(2, 2) * 3.0; };
  CHECK(linear_family_inverse_derivative(constant, v({0.5}), v({1, 2}), v({1.0})).norm() == 0.0);
  const auto diag = [](const Vector& p) { return Matrix(v({1.0 + p(0), 2.0}).asDiagonal()); };
  const Vector d = linear_family_inverse_derivative(diag, v({0.0}), v({1, 1}), v({1.0}));
  CHECK(d(0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(d(1) == 0.0);
  CHECK_THROWS_AS(linear_family_inverse_derivative([](const Vector&) { return Matrix::Zero(2, 2); }, v({0.0}),
                                                   v({1, 1}), v({1.0})),
                  DomainError);
}

TEST_CASE("linear_family_inverse_derivative agrees with differences of the solved inverse") {
  const auto fam = [](const Vector& p) {
    Matrix m(2, 2);
    m << 2.0 + std::sin(p(0)), p(1), p(0) * p(1), 1.5 + p(1) * p(1);
    return m;
  };
  const Vector p = v({0.3, -0.6});
  const Vector z = v({1.0, -2.0});
  const Vector y = v({0.7, 0.2});
  const double h = 1e-4;
  // oracle: central difference of p -> A(p)^{-1} z solved directly
  const Vector oracle = (fam(p + h * y).fullPivLu().solve(z) - fam(p - h * y).fullPivLu().solve(z)) / (2 * h);
  const Vector mine = linear_family_inverse_derivative(fam, p, z, y);
  CHECK((mine - oracle).norm() / oracle.norm() < 1e-6);
}
