#include "doctest.h"

#include <cmath>
#include <random>

#include "diffk/errors.hpp"
#include "diffk/fields.hpp"
#include "diffk/numdiff.hpp"

using namespace diffk;

namespace {

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

std::vector<ScalarExpr> exprs(std::initializer_list<const char*> srcs) {
  std::vector<ScalarExpr> out;
  for (const char* s : srcs) out.push_back(ScalarExpr::parse(s));
  return out;
}

BoundaryVanishingField logistic(double c) {
  return BoundaryVanishingField(ConvexBody::interval(0.0, 1.0), exprs({std::to_string(c).c_str()}),
                                Weight::slack());
}

}  // namespace

TEST_CASE("eval_field examples") {
  CHECK(logistic(0.3).eval(0.0, v({0.5}))(0) == doctest::Approx(0.075).epsilon(1e-15));
  CHECK(logistic(0.3).eval(0.5, v({0.0}))(0) == 0.0);
  CHECK(logistic(0.3).eval(0.5, v({1.0}))(0) == 0.0);
  const BoundaryVanishingField flat(ConvexBody::interval(0.0, 1.0), exprs({"1"}), Weight::flat(1.0));
  CHECK(flat.eval(0.0, v({0.0}))(0) == 0.0);
  CHECK(flat.eval(0.0, v({0.5}))(0) == doctest::Approx(std::exp(-2.0)));
  CHECK_THROWS_AS(logistic(0.3).eval(0.0, v({1.5})), DomainError);
  CHECK_THROWS_AS(logistic(0.3).eval(2.0, v({0.5})), DomainError);
  const BoundaryVanishingField bad(ConvexBody::interval(0.0, 1.0), exprs({"1/(x1-0.5)"}), Weight::slack(),
                                   {}, {}, FieldOptions{2, 2, 0, 1.0});
  CHECK_THROWS_AS(bad.eval(0.0, v({0.5})), EvaluationError);
}

TEST_CASE("unweighted fields must vanish on the boundary") {
  CHECK_THROWS_AS(BoundaryVanishingField(ConvexBody::interval(0.0, 1.0), exprs({"x1"}), Weight::none()),
                  DomainError);
  const BoundaryVanishingField ok(ConvexBody::interval(0.0, 1.0), exprs({"0.2*x1*(1-x1)"}), Weight::none());
  CHECK(ok.theta_bound() == doctest::Approx(0.2).epsilon(0.05));
  CHECK_THROWS_AS(BoundaryVanishingField(ConvexBody::interval(0.0, 1.0), exprs({"x2"}), Weight::slack()),
                  DimensionError);
  CHECK_THROWS_AS(BoundaryVanishingField(ConvexBody::interval(0.0, 1.0), exprs({"1", "1"}), Weight::slack()),
                  DimensionError);
}

TEST_CASE("lipschitz_seminorm") {
  SUBCASE("1D logistic: sup |c(1-2x)| = c") {
    const double q = lipschitz_seminorm(logistic(0.3), 5, 256, 0);
    CHECK(std::abs(q - 0.3) / 0.3 < 0.05);
    CHECK(q >= 0.3 * 0.99);
  }
  SUBCASE("zero field") {
    CHECK(lipschitz_seminorm(BoundaryVanishingField::zero(ConvexBody::simplex(2)), 3, 16, 0) == 0.0);
  }
  SUBCASE("2D slack product against a dense-grid maximum of the exact gradient") {
    const double c = 0.7;
    const BoundaryVanishingField f(ConvexBody::box(v({0, 0}), v({1, 1})), exprs({"0.7", "0"}), Weight::slack());
    // f1 = c x(1-x) y(1-y); grad = c((1-2x) y(1-y), x(1-x)(1-2y))
    double brute = 0.0;
    const int m = 400;
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= m; ++j) {
        const double x = double(i) / m, y = double(j) / m;
        brute = std::max(brute, c * std::hypot((1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)));
      }
    }
    const double q = lipschitz_seminorm(f, 3, 512, 1);
    CHECK(q > 0.0);
    CHECK(std::abs(q - brute) / brute < 0.05);
  }
}

TEST_CASE("verify_pointwise_bound") {
  // x(1-x) <= min(x, 1-x) on [0, 1]
  const auto rep = verify_pointwise_bound(logistic(0.3), 0.0, 200);
  CHECK(rep.pass);
  CHECK(rep.max_ratio <= 1.0);
  CHECK(rep.max_ratio > 0.5);
  const auto zero = verify_pointwise_bound(BoundaryVanishingField::zero(ConvexBody::interval(0, 1)), 0.0, 50);
  CHECK(zero.max_ratio == 0.0);
  CHECK(zero.pass);
}

TEST_CASE("property: boundary vanishing and pointwise bound for random fields") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const std::vector<ConvexBody> bodies{ConvexBody::box(v({0, 0}), v({1, 1})), ConvexBody::ball(v({0, 0}), 1.0),
                                       ConvexBody::simplex(2), ConvexBody::simplex(3)};
  int k = 0;
  for (const auto& body : bodies) {
    for (int rep = 0; rep < 3; ++rep, ++k) {
      std::vector<ScalarExpr> base;
      for (int i = 1; i <= body.dimension(); ++i) {
        const std::string src = std::to_string(coef(rng)) + "*sin(" + std::to_string(coef(rng)) + "*x" +
                                std::to_string(1 + (i % body.dimension())) + "+t)+" + std::to_string(coef(rng));
        base.push_back(ScalarExpr::parse(src));
      }
      const Weight w = rep == 2 ? Weight::flat(0.5) : Weight::slack();
      const BoundaryVanishingField f(body, base, w, {0.0, 2.0});
      const auto boundary = body.sample_boundary(1000, 100 + k);
      for (double t : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        for (const auto& x : boundary) {
          const Vector fx = f.eval(t, x);
          CHECK(fx.cwiseAbs().maxCoeff() == 0.0);
        }
        CHECK(verify_pointwise_bound(f, t, 200, 5 + k).pass);
      }
    }
  }
}

TEST_CASE("central differences of eval_field converge at second order") {
  const BoundaryVanishingField f(ConvexBody::interval(0.0, 1.0), exprs({"sin(x1)"}), Weight::slack(), {}, {},
                                 FieldOptions{2, 8, 0, 1.0});
  for (double x : {0.2, 0.5, 0.7}) {
    const double exact = std::cos(x) * x * (1 - x) + std::sin(x) * (1 - 2 * x);
    auto fd = [&](double h) { return (f.eval(0, v({x + h}))(0) - f.eval(0, v({x - h}))(0)) / (2 * h); };
    const double e1 = std::abs(fd(1e-2) - exact);
    const double e2 = std::abs(fd(5e-3) - exact);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("rescaling and curves") {
  const BoundaryVanishingField f(ConvexBody::interval(0.0, 1.0), exprs({"1+t"}), Weight::slack(), {0.0, 3.0});
  const auto g = f.rescaled(1.0, 3.0);
  CHECK(g.time().begin == 0.0);
  CHECK(g.time().end == 1.0);
  CHECK(g.theta_bound() == doctest::Approx(2.0 * f.theta_bound()));
  const Vector x = v({0.3});
  CHECK(g.eval(0.25, x)(0) == doctest::Approx(2.0 * f.eval(1.5, x)(0)));
  const auto back = f.rescaled(3.0, 1.0);
  CHECK(back.eval(0.25, x)(0) == doctest::Approx(-2.0 * f.eval(2.5, x)(0)));
  CHECK(g.rescaled(0.5, 1.0).eval(0.5, x)(0) == doctest::Approx(0.5 * 2.0 * f.eval(2.5, x)(0)));

  CHECK_THROWS_AS((void)LieAlgebraCurve{f.rescaled(0.0, 1.0)}, CertificateError);
  const auto small = LieAlgebraCurve::over(logistic(0.3), 0.0, 1.0);
  CHECK(small.theta() <= kMaxCurveTheta);
  CHECK_THROWS_AS((void)LieAlgebraCurve{f}, DomainError);
  CHECK_THROWS_AS(f.rescaled(0.0, 4.0), DomainError);
}

TEST_CASE("field json descriptor") {
  const auto j = nlohmann::json::parse(R"({"base":["0.3"],"weight":{"kind":"slack"},"time":[0,2]})");
  const auto f = field_from_json(j, ConvexBody::interval(0, 1));
  CHECK(f.time().end == 2.0);
  CHECK(f.eval(1.0, v({0.5}))(0) == doctest::Approx(0.075));
  const auto flat = field_from_json(nlohmann::json::parse(R"({"base":["1"],"weight":{"kind":"flat","alpha":2}})"),
                                    ConvexBody::interval(0, 1));
  CHECK(flat.weight().kind == Weight::Kind::FlatExp);
  CHECK(flat.weight().alpha == 2.0);
  const auto roundtrip = field_from_json(field_to_json(f), ConvexBody::interval(0, 1));
  CHECK(roundtrip.eval(1.0, v({0.25}))(0) == f.eval(1.0, v({0.25}))(0));
  CHECK_THROWS_AS(field_from_json(nlohmann::json::parse(R"({"base":["1"],"weight":{"kind":"odd"}})"),
                                  ConvexBody::interval(0, 1)),
                  DomainError);
}
