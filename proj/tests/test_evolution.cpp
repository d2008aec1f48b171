#include "doctest.h"

#include <cmath>
#include <random>

#include "diffk/errors.hpp"
#include "diffk/evolution.hpp"

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

const ConvexBody kUnit = ConvexBody::interval(0.0, 1.0);

LieAlgebraCurve logistic_curve(double c) {
  return LieAlgebraCurve(BoundaryVanishingField(kUnit, {ScalarExpr::constant(c)}, Weight::slack()));
}

// f(p, t, x) = p x (1 - x) on J = [-1, 3], P = [0, 1]
ParametricFlowSpec logistic_family() {
  const BoundaryVanishingField f(kUnit, {ScalarExpr::parse("p1")}, Weight::slack(), {-1.0, 3.0}, v({0.5}));
  return ParametricFlowSpec(f, v({0.0}), v({1.0}));
}

}  // namespace

TEST_CASE("evolve examples") {
  SUBCASE("zero curve") {
    const EvolutionResult r = evolve(LieAlgebraCurve(BoundaryVanishingField::zero(kUnit)), 8);
    for (const Diffeo& s : r.snapshots) CHECK(s.apply(v({0.3}))(0) == 0.3);
    CHECK(r.logderiv_residual == 0.0);
  }
  SUBCASE("logistic") {
    const EvolutionResult r = evolve(logistic_curve(0.3), 16);
    REQUIRE(r.snapshots.size() == 17);
    CHECK(r.times.back() == 1.0);
    CHECK(r.snapshots.back().apply(v({0.5}))(0) == doctest::Approx(sigmoid(0.3)).epsilon(1e-6));
    CHECK(std::abs(r.snapshots.back().apply(v({0.5}))(0) - 0.574443) < 1e-6);
    for (std::size_t j = 0; j < r.times.size(); j += 4)
      CHECK(r.snapshots[j].apply(v({0.2}))(0) == doctest::Approx(sigmoid(logit(0.2) + 0.3 * r.times[j])).epsilon(1e-8));
    for (const Diffeo& s : r.snapshots) {
      CHECK(s.apply(v({0.0}))(0) == 0.0);
      CHECK(s.apply(v({1.0}))(0) == 1.0);
    }
    for (const Vector& x : kUnit.sample_interior(20, 3)) CHECK(std::abs(r.snapshots[0].apply(x)(0) - x(0)) <= 1e-12);
  }
}

TEST_CASE("right logarithmic derivative converges at second order in M") {
  const auto samples = kUnit.sample_interior(8, 1);
  const double r64 = logderiv_residual(logistic_curve(0.3), 64, {}, samples);
  const double r128 = logderiv_residual(logistic_curve(0.3), 128, {}, samples);
  CHECK(r64 < 1e-4);
  CHECK(r64 / r128 == doctest::Approx(4.0).epsilon(0.125));
  // oracle: for y = sigmoid(s), y''' = c^3 y (1-y)(1-6y+6y^2); central difference error is y'''/(6 M^2)
  double worst = 0.0;
  for (const Vector& x : samples)
    for (int j = 1; j < 64; ++j) {
      const double y = sigmoid(logit(x(0)) + 0.3 * j / 64.0);
      worst = std::max(worst, std::abs(0.027 * y * (1 - y) * (1 - 6 * y + 6 * y * y)) / (6.0 * 64 * 64));
    }
  CHECK(r64 == doctest::Approx(worst).epsilon(0.05));
}

TEST_CASE("evol_r") {
  CHECK(evol_r(LieAlgebraCurve(BoundaryVanishingField::zero(kUnit))).apply(v({0.4}))(0) == 0.4);
  const Diffeo phi = evol_r(logistic_curve(0.3));
  CHECK(std::abs(phi.apply(v({0.5}))(0) - sigmoid(0.3)) < 1e-6);
  CHECK(phi.lip_gamma() == doctest::Approx(std::expm1(logistic_curve(0.3).theta())));
  const ChartReport rep = chart_membership(phi, 41, v({0.5}), 20);
  CHECK(rep.passed());
  // sampled Lipschitz constant of the time-one map minus id stays under the heuristic bound
  CHECK(rep.lipschitz_estimate <= phi.lip_gamma() * 1.05);
}

TEST_CASE("flow_map examples") {
  const ParametricFlowSpec spec = logistic_family();
  CHECK(spec.theta() == doctest::Approx(1.0).epsilon(0.06));
  CHECK(flow_map(spec, v({0.4}), 0.7, 0.7, v({0.3}))(0) == 0.3);
  CHECK(std::abs(flow_map(spec, v({0.4}), 0.0, 2.0, v({0.5}))(0) - sigmoid(0.8)) < 1e-6);
  CHECK(std::abs(flow_map(spec, v({0.4}), 0.0, 2.0, v({0.5}))(0) - 0.689974) < 1e-6);
  // p = 1 over [0, 2] needs panels
  CHECK(panel_count(2.0 * spec.theta()) == static_cast<int>(std::ceil(2.0 * spec.theta() / 0.3)));
  CHECK(std::abs(flow_map(spec, v({1.0}), 0.0, 2.0, v({0.2}))(0) - sigmoid(logit(0.2) + 2.0)) < 1e-6);
  CHECK(std::abs(flow_map(spec, v({1.0}), 2.0, 0.0, v({0.2}))(0) - sigmoid(logit(0.2) - 2.0)) < 1e-6);
  for (double x : {0.05, 0.5, 0.93}) {
    const Vector y = flow_map(spec, v({0.7}), 0.3, 1.8, v({x}));
    CHECK(std::abs(flow_map(spec, v({0.7}), 1.8, 0.3, y)(0) - x) < 1e-6);
  }
  CHECK(flow_map(spec, v({0.7}), 0.0, 2.0, v({1.0}))(0) == 1.0);
  CHECK_THROWS_AS((void)flow_map(spec, v({1.5}), 0.0, 1.0, v({0.5})), DomainError);
  CHECK_THROWS_AS((void)flow_map(spec, v({0.5}), 0.0, 4.0, v({0.5})), DomainError);
  CHECK_THROWS_AS((void)flow_map(spec, v({0.5}), 0.0, 1.0, v({1.5})), DomainError);
}

TEST_CASE("panel_count") {
  CHECK(panel_count(0.0) == 1);
  CHECK(panel_count(1.0 / 3.0) == 1);
  CHECK(panel_count(0.34) == 2);
  CHECK(panel_count(0.9) == 3);
  CHECK(panel_count(0.91) == 4);
}

TEST_CASE("flow_trajectory") {
  const ParametricFlowSpec spec = logistic_family();
  const FlowTrajectory tr = flow_trajectory(spec, v({1.0}), 0.0, 2.0, v({0.2}));
  CHECK(tr.panels == panel_count(2.0 * spec.theta()));
  REQUIRE(tr.times.size() == static_cast<std::size_t>(tr.states.cols()));
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 2.0);
  for (std::size_t i = 0; i < tr.times.size(); i += 997)
    CHECK(tr.states(0, static_cast<Eigen::Index>(i)) == doctest::Approx(sigmoid(logit(0.2) + tr.times[i])).epsilon(1e-7));
  CHECK(tr.states(0, tr.states.cols() - 1) == flow_map(spec, v({1.0}), 0.0, 2.0, v({0.2}))(0));
}

TEST_CASE("flow_sensitivity") {
  SUBCASE("zero field") {
    const ParametricFlowSpec spec(BoundaryVanishingField::zero(ConvexBody::box(v({0, 0}), v({1, 1})), {-1.0, 2.0}));
    const FlowSensitivity s = flow_sensitivity(spec, Vector(), 0.0, 1.5, v({0.4, 0.6}));
    CHECK(s.d_x0.isApprox(Matrix::Identity(2, 2), 1e-12));
    CHECK(s.d_p.cols() == 0);
    CHECK(s.d_t.norm() == 0.0);
  }
  SUBCASE("logistic closed form") {
    const ParametricFlowSpec spec = logistic_family();
    const FlowSensitivity s = flow_sensitivity(spec, v({0.4}), 0.0, 2.0, v({0.5}));
    const double sp = sigmoid(0.8) * (1 - sigmoid(0.8));
    CHECK(std::abs(s.d_p(0, 0) - 2 * sp) < 1e-4);
    CHECK(std::abs(s.d_p(0, 0) - 0.427820) < 1e-4);
    CHECK(s.d_x0(0, 0) == doctest::Approx(sp / 0.25).epsilon(1e-6));
    CHECK(s.d_t(0) == doctest::Approx(0.4 * sp).epsilon(1e-6));
    CHECK(s.d_t0(0) == doctest::Approx(-0.4 * sp).epsilon(1e-6));
    for (double r : {s.ratio_p, s.ratio_x0, s.ratio_t0, s.ratio_t}) {
      CHECK(r >= 3.5);
      CHECK(r <= 4.5);
    }
  }
  SUBCASE("perturbations must stay in the domain") {
    const ParametricFlowSpec spec = logistic_family();
    CHECK_THROWS_AS((void)flow_sensitivity(spec, v({1.0}), 0.0, 1.0, v({0.5})), DomainError);
    CHECK_THROWS_AS((void)flow_sensitivity(spec, v({0.5}), 0.0, 1.0, v({0.0})), DomainError);
    CHECK_THROWS_AS((void)flow_sensitivity(spec, v({0.5}), 0.0, 3.0, v({0.5})), DomainError);
  }
}

TEST_CASE("group_flow_consistency") {
  const ParametricFlowSpec spec(logistic_curve(0.3).field());
  CHECK(group_flow_consistency(spec, Vector(), 0.0, 0.0, 8).max_discrepancy == 0.0);
  CHECK(group_flow_consistency(spec, Vector(), 0.5, 0.5, 16).max_discrepancy < 1e-6);
  CHECK(group_flow_consistency(spec, Vector(), 1.0, -1.0, 16).max_discrepancy < 1e-6);
  CHECK(group_flow_consistency(spec, Vector(), 0.25, 0.5, 16).max_discrepancy < 1e-6);
  const BoundaryVanishingField timed(kUnit, {ScalarExpr::parse("0.2*t")}, Weight::slack());
  CHECK_THROWS_AS((void)group_flow_consistency(ParametricFlowSpec(timed), Vector(), 0.5, 0.5), DomainError);
}
