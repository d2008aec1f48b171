#include "diffk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "diffk/diffeo.hpp"
#include "diffk/errors.hpp"
#include "diffk/evolution.hpp"
#include "diffk/jets.hpp"
#include "diffk/numdiff.hpp"

namespace diffk {

namespace {

using Rng = std::mt19937_64;

Vector vec(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }
double logit(double y) { return std::log(y / (1.0 - y)); }

class Suite {
 public:
  Suite(std::string name, VerifyReport& report) : name_(std::move(name)), report_(report) {}

  // value <= threshold passes
  void at_most(const std::string& check, double value, double threshold, std::string detail = {}) {
    add(check, std::isfinite(value) && value <= threshold, value, threshold, std::move(detail));
  }
  void in_range(const std::string& check, double value, double lo, double hi) {
    std::ostringstream os;
    os << "expected within [" << lo << ", " << hi << "]";
    add(check, value >= lo && value <= hi, value, hi, os.str());
  }
  void holds(const std::string& check, bool ok, std::string detail = {}) {
    add(check, ok, ok ? 1.0 : 0.0, 1.0, std::move(detail));
  }
  // a check that throws counts as a failure
  template <class Fn>
  void guarded(const std::string& check, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(check, false, std::nan(""), 0.0, std::string("threw: ") + e.what());
    }
  }

 private:
  void add(const std::string& check, bool pass, double value, double threshold, std::string detail) {
    report_.checks.push_back({name_, check, pass, value, threshold, std::move(detail)});
  }
  std::string name_;
  VerifyReport& report_;
};

const ConvexBody& unit() {
  static const ConvexBody b = ConvexBody::interval(0.0, 1.0);
  return b;
}
const ConvexBody& square() {
  static const ConvexBody b = ConvexBody::box(vec({0, 0}), vec({1, 1}));
  return b;
}
const ConvexBody& disk() {
  static const ConvexBody b = ConvexBody::ball(vec({0, 0}), 1.0);
  return b;
}

BoundaryVanishingField logistic(double c, TimeInterval time = {}) {
  return BoundaryVanishingField(unit(), {ScalarExpr::constant(c)}, Weight::slack(), time);
}

Diffeo bump(double a) { return Diffeo::analytic(logistic(a)); }

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << x;
  return os.str();
}

// Random smooth boundary-vanishing field on a 2D body scaled to theta ~ target.
BoundaryVanishingField random_field(const ConvexBody& body, Rng& rng, double target, bool time_dependent = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), f(0.5, 3.0);
  std::vector<std::string> src;
  for (int i = 0; i < 2; ++i) {
    std::string e = num(u(rng)) + "+" + num(u(rng)) + "*sin(" + num(f(rng)) + "*x1+" + num(u(rng)) + ")+" +
                    num(u(rng)) + "*x2";
    if (time_dependent) e += "+" + num(u(rng)) + "*cos(" + num(f(rng)) + "*t)";
    src.push_back(e);
  }
  auto build = [&](double scale) {
    std::vector<ScalarExpr> base;
    for (const auto& e : src) base.push_back(ScalarExpr::parse(num(scale) + "*(" + e + ")"));
    return BoundaryVanishingField(body, std::move(base), Weight::slack());
  };
  const BoundaryVanishingField probe = build(1.0);
  const double theta = probe.theta_bound();
  return theta > 0.0 ? build(target / theta) : probe;
}

double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// ---------------------------------------------------------------------------

void geometry_suite(Suite& s, std::uint64_t seed) {
  const std::vector<std::pair<std::string, ConvexBody>> bodies = {
      {"square", square()},
      {"simplex3", ConvexBody::simplex(3)},
      {"disk", disk()},
      {"ball3", ConvexBody::ball(vec({0.5, -1.0, 2.0}), 0.7)}};
  for (const auto& [name, body] : bodies) {
    s.guarded("boundary_samples_exact." + name, [&, &name = name, &body = body] {
      int bad = 0;
      for (const Vector& b : body.sample_boundary(1000, seed)) {
        const Vector sl = body.scaled_slacks(b);
        if (!body.contains(b) || sl.minCoeff() != 0.0) ++bad;
      }
      s.at_most("boundary_samples_exact." + name, bad, 0, "samples with nonzero minimal slack");
    });
    s.guarded("distance_lipschitz." + name, [&, &name = name, &body = body] {
      const auto pts = body.sample_interior(200, seed + 1);
      double worst = 0.0;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lhs = std::abs(body.distance_to_boundary(pts[i]) - body.distance_to_boundary(pts[i + 1]));
        worst = std::max(worst, lhs - (pts[i] - pts[i + 1]).norm());
      }
      s.at_most("distance_lipschitz." + name, worst, 1e-14, "max of |d(x)-d(y)| - |x-y|");
      double concave = 0.0;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vector mid = 0.5 * (pts[i] + pts[i + 1]);
        concave = std::max(concave, 0.5 * (body.distance_to_boundary(pts[i]) + body.distance_to_boundary(pts[i + 1])) -
                                        body.distance_to_boundary(mid));
      }
      s.at_most("distance_concave." + name, concave, 1e-14, "max midpoint concavity defect");
    });
  }
  s.guarded("distance_closed_form", [&] {
    double worst = 0.0;
    for (const Vector& x : square().sample_interior(500, seed + 2)) {
      const double oracle = std::min({x(0), 1 - x(0), x(1), 1 - x(1)});
      worst = std::max(worst, std::abs(square().distance_to_boundary(x) - oracle));
    }
    for (const Vector& x : disk().sample_interior(500, seed + 3))
      worst = std::max(worst, std::abs(disk().distance_to_boundary(x) - (1.0 - x.norm())));
    s.at_most("distance_closed_form", worst, 1e-15, "square and disk against closed forms");
  });
}

void fields_suite(Suite& s, std::uint64_t seed) {
  s.guarded("logistic_example", [&] {
    s.at_most("logistic_example", std::abs(logistic(0.3).eval(0.0, vec({0.5}))(0) - 0.075), 1e-16);
  });
  s.guarded("seminorm_1d", [&] {
    for (double c : {0.1, 0.3}) {
      const double q = lipschitz_seminorm(logistic(c), 3, 256, seed);
      s.in_range("seminorm_1d.c=" + num(c), q / c, 1.0, 1.06);
    }
  });
  s.guarded("boundary_vanishing", [&] {
    Rng rng(seed + 10);
    int bad = 0, checked = 0;
    double ratio = 0.0;
    for (const ConvexBody* body : {&square(), &disk()}) {
      for (int k = 0; k < 5; ++k) {
        const BoundaryVanishingField f = random_field(*body, rng, 0.3);
        for (const Vector& b : body->sample_boundary(200, seed + static_cast<std::uint64_t>(k)))
          for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            ++checked;
            if (f.eval(t, b).cwiseAbs().maxCoeff() != 0.0) ++bad;
          }
        ratio = std::max(ratio, verify_pointwise_bound(f, 0.5, 200, seed).max_ratio);
      }
    }
    s.at_most("boundary_vanishing", bad, 0, std::to_string(checked) + " (t, boundary point) pairs");
    s.at_most("pointwise_bound", ratio, 1.0, "max |f| / (theta d)");
  });
}

void contraction_suite(Suite& s, std::uint64_t seed, const VerifyHooks& hooks) {
  s.guarded("logistic_closed_form", [&] {
    double worst = 0.0;
    for (double c : {0.1, 0.3}) {
      // horizons beyond 1 go through panelled flow maps
      const ParametricFlowSpec spec(logistic(c, {0.0, 2.0}));
      for (double x0 : {0.1, 0.5, 0.8})
        for (double t : {0.5, 1.0, 2.0})
          worst = std::max(worst, std::abs(flow_map(spec, Vector(), 0.0, t, vec({x0}))(0) - sigmoid(logit(x0) + c * t)));
    }
    s.at_most("logistic_closed_form", worst, 1e-6, "c in {0.1, 0.3}, t in {0.5, 1, 2}");
  });
  s.guarded("grid_second_order", [&] {
    const LieAlgebraCurve curve(logistic(0.3));
    auto err = [&](int n) {
      return std::abs(picard_solve(picard_problem(curve, vec({0.5})), n).final_state()(0) - sigmoid(0.3));
    };
    s.in_range("grid_second_order", err(64) / err(128), 3.2, 4.8);
  });
  s.guarded("confinement", [&] {
    Rng rng(seed + 20);
    double worst = -1.0;
    for (const ConvexBody* body : {&square(), &disk()})
      for (int k = 0; k < 25; ++k) {
        const LieAlgebraCurve curve(random_field(*body, rng, 0.3));
        for (const Vector& x : body->sample_interior(4, seed + static_cast<std::uint64_t>(k))) {
          const PicardProblem pb = picard_problem(curve, x);
          worst = std::max(worst, picard_solve(pb, 512).max_excursion - pb.radius);
        }
      }
    s.at_most("confinement", worst, 1e-9, "max excursion beyond R = d(x0)/2");
  });
  s.guarded("boundary_continuity", [&] {
    Rng rng(seed + 21);
    const LieAlgebraCurve curve(random_field(square(), rng, 0.3));
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    double worst = -1.0;
    for (const Vector& b : square().sample_boundary(4, seed)) {
      const FlowResult r0 = picard_solve(picard_problem(curve, b), 512);
      for (int k = 0; k < 25; ++k) {
        Vector x1 = b + vec({u(rng), u(rng)});
        if (!square().contains(x1)) continue;
        const FlowResult r1 = picard_solve(picard_problem(curve, x1), 512);
        const double gap = (r1.states - r0.states).colwise().norm().maxCoeff();
        worst = std::max(worst, gap - 1.5 * (x1 - b).norm());
      }
    }
    s.at_most("boundary_continuity", worst, 1e-8, "sup_t gap - 1.5 |x1 - x0|");
  });
  s.guarded("fixed_point_sensitivity", [&] {
    auto scalar = [](auto fn) {
      return [fn](const Vector& p, const Vector& x) { return Vector::Constant(1, fn(p(0), x(0))); };
    };
    const std::vector<std::pair<ContractionFamily, std::vector<double>>> cases = {
        {{scalar([](double p, double x) { return 0.5 * std::sin(p) + 0.5 * x; }), 0.5}, {0.7, -1.2}},
        {{scalar([](double p, double x) { return 0.9 * x + p; }), 0.9}, {1.0}},
        {{scalar([](double, double x) { return 0.5 * x + 0.3; }), 0.5}, {0.4}},
        {{[](const Vector& p, const Vector& x) { return Vector(0.5 * p.array().sin() + 0.3 * x.array().cos()); }, 0.3},
         {0.2, 1.1}}};
    double worst = 0.0;
    for (const auto& [fam, ps] : cases)
      for (double p0 : ps) {
        const Vector xp = fixed_point(fam, vec({p0}), vec({0.0}), 1e-13).point;
        const Matrix d = hooks.fixed_point_sensitivity(fam, vec({p0}), xp, 1e-5);
        const double h = 1e-4;
        const Matrix oracle = (fixed_point(fam, vec({p0 + h}), xp, 1e-13).point -
                               fixed_point(fam, vec({p0 - h}), xp, 1e-13).point) / (2 * h);
        worst = std::max(worst, rel_err(d, oracle));
      }
    s.at_most("fixed_point_sensitivity", worst, 1e-5, "relative error against re-solved differences");
  });
  s.guarded("linear_family_inverse_derivative", [&] {
    using Family = std::function<Matrix(const Vector&)>;
    struct Case {
      Family a;
      Vector p, z, dir;
    };
    const Family planar = [](const Vector& p) {
      Matrix m(2, 2);
      m << 2 + p(0), std::sin(p(1)), p(0) * p(1), 3 - p(1);
      return m;
    };
    const std::vector<Case> cases = {
        {[](const Vector& p) { return Matrix::Constant(1, 1, 1 + p(0)); }, vec({0.0}), vec({1.0}), vec({1.0})},
        {[](const Vector& p) { return Matrix(vec({1 + p(0), 2.0}).asDiagonal()); }, vec({0.0}), vec({1.0, 1.0}),
         vec({1.0})},
        {planar, vec({0.3, 0.4}), vec({1.0, -2.0}), vec({1.0, 0.0})},
        {planar, vec({-0.5, 1.0}), vec({1.0, -2.0}), vec({0.6, -0.8})}};
    double worst = 0.0;
    for (const auto& c : cases) {
      const Vector d = hooks.linear_family_inverse_derivative(c.a, c.p, c.z, c.dir, 1e-5);
      const double h = 1e-5;
      const Vector oracle =
          (c.a(c.p + h * c.dir).fullPivLu().solve(c.z) - c.a(c.p - h * c.dir).fullPivLu().solve(c.z)) / (2 * h);
      worst = std::max(worst, rel_err(d, oracle));
    }
    s.at_most("linear_family_inverse_derivative", worst, 1e-6, "relative error against differences of solves");
  });
}

void diffeo_suite(Suite& s, std::uint64_t seed) {
  s.guarded("examples", [&] {
    s.at_most("apply_example", std::abs(bump(0.2).apply(vec({0.5}))(0) - 0.55), 1e-15);
    s.at_most("compose_example", std::abs(compose(bump(0.1), bump(0.2)).apply(vec({0.5}))(0) - 0.57475), 1e-15);
    const double x = invert_at(bump(0.2), vec({0.55})).point(0);
    const double oracle = (1.2 - std::sqrt(1.44 - 0.8 * 0.55)) / 0.4;
    s.at_most("invert_at_example", std::abs(x - oracle), 1e-12);
    s.at_most("inverse_jacobian_example", std::abs(invert(bump(0.2)).jacobian(vec({0.55}))(0, 0) - 1.0), 1e-9);
  });
  s.guarded("chart_examples", [&] {
    s.holds("chart.identity", chart_membership(Diffeo::identity(unit()), 41, vec({0.5})).passed());
    const ChartReport r = chart_membership(bump(0.3), 41, vec({0.5}));
    s.holds("chart.bump03", r.passed() && r.injectivity == ChartReport::Injectivity::LipschitzCertified);
    FieldOptions forced;
    forced.theta = 3.0;
    const Diffeo bad = Diffeo::analytic(
        BoundaryVanishingField(unit(), {ScalarExpr::constant(-3.0)}, Weight::slack(), {}, {}, forced));
    s.holds("chart.fold_rejected", !chart_membership(bad, 41, vec({0.5})).jacobian_ok);
  });
  Rng rng(seed + 30);
  std::vector<Diffeo> elems;
  for (int k = 0; k < 20; ++k) elems.push_back(Diffeo::analytic(random_field(square(), rng, 0.3, false)));
  const auto samples = square().sample_interior(200, seed + 31);
  s.guarded("group_axioms", [&] {
    double worst = 0.0;
    for (const Diffeo& phi : elems) {
      const Diffeo inv = invert(phi);
      for (const Vector& x : samples) {
        worst = std::max(worst, (compose(inv, phi).apply(x) - x).norm());
        worst = std::max(worst, (compose(phi, inv).apply(x) - x).norm());
      }
    }
    s.at_most("group_inverse_laws", worst, 1e-8);
    double assoc = 0.0;
    for (std::size_t i = 0; i + 2 < elems.size(); i += 3) {
      const Diffeo lhs = compose(compose(elems[i], elems[i + 1]), elems[i + 2]);
      const Diffeo rhs = compose(elems[i], compose(elems[i + 1], elems[i + 2]));
      assoc = std::max(assoc, sup_distance(lhs, rhs, samples));
    }
    s.at_most("group_associativity", assoc, 1e-8);
  });
  s.guarded("boundary_fixing", [&] {
    const LieAlgebraCurve curve(random_field(square(), rng, 0.3));
    const Diffeo flow = Diffeo::flow_generated(curve, 1.0, {512});
    const std::vector<Diffeo> built = {flow, compose(elems[0], elems[1]), compose(flow, elems[3]), invert(elems[2]),
                                       invert(flow)};
    const Diffeo disk_flow = Diffeo::flow_generated(LieAlgebraCurve(random_field(disk(), rng, 0.3)), 1.0, {512});
    int bad = 0;
    for (const Diffeo& d : built)
      for (const Vector& b : square().sample_boundary(1000, seed))
        if (d.apply(b) != b) ++bad;
    for (const Vector& b : disk().sample_boundary(1000, seed))
      if (disk_flow.apply(b) != b || invert(disk_flow).apply(b) != b) ++bad;
    s.at_most("boundary_fixing", bad, 0, "flows, composites and inverses on 1000 boundary samples each");
  });
  s.guarded("bi_lipschitz", [&] {
    double worst = 0.0;
    for (const Diffeo& phi : elems) {
      const double th = phi.lip_gamma();
      for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const double d = (samples[i] - samples[i + 1]).norm();
        const double di = (phi.apply(samples[i]) - phi.apply(samples[i + 1])).norm();
        worst = std::max({worst, (1 - th) * d - di, di - (1 + th) * d});
      }
    }
    s.at_most("bi_lipschitz", worst, 1e-15);
  });
  s.guarded("inverse_iterations", [&] {
    int excess = -1000;
    for (const Diffeo& phi : elems) {
      const int bound = static_cast<int>(std::ceil(std::log(1e-13) / std::log(phi.lip_gamma()))) + 2;
      for (const Vector& y : samples) excess = std::max(excess, invert_at(phi, y).iterations - bound);
    }
    s.at_most("inverse_iterations", excess, 0, "iterations beyond ceil(log tol / log theta) + 2");
  });
  s.guarded("chain_rule_jacobian", [&] {
    const Diffeo c = compose(elems[0], elems[1]);
    double worst = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      const Vector& x = samples[i];
      if (square().distance_to_boundary(x) < 1e-4) continue;
      Matrix fd(2, 2);
      for (int k = 0; k < 2; ++k) {
        Vector e = Vector::Zero(2);
        e(k) = 1e-5;
        fd.col(k) = (c.apply(x + e) - c.apply(x - e)) / 2e-5;
      }
      worst = std::max(worst, rel_err(c.jacobian(x), fd));
    }
    s.at_most("chain_rule_jacobian", worst, 1e-5);
  });
}

JetQ random_rational_jet(Rng& rng, int n, int k, bool unit_jet) {
  std::uniform_int_distribution<int> numer(-4, 4), denom(1, 3), coin(0, 2);
  JetQ p(n, k);
  std::vector<MultiIndex> monos;
  std::function<void(MultiIndex, int, int)> gen = [&](MultiIndex cur, int pos, int left) {
    if (pos == n) {
      if (degree(cur) >= 1) monos.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[static_cast<std::size_t>(pos)] = e;
      gen(cur, pos + 1, left - e);
    }
  };
  gen(MultiIndex(static_cast<std::size_t>(n), 0), 0, k);
  for (int i = 0; i < n; ++i)
    for (const auto& a : monos)
      if (coin(rng) == 0) p.set(i, a, Rational(numer(rng), denom(rng)));
  while (unit_jet && !jet_is_unit(p))
    for (int i = 0; i < n; ++i) {
      MultiIndex e(static_cast<std::size_t>(n), 0);
      e[static_cast<std::size_t>(i)] = 1;
      p.set(i, e, p.coeff(i, e) + Rational(numer(rng) + 5, denom(rng)));
    }
  return p;
}

void jets_suite(Suite& s, std::uint64_t seed) {
  s.guarded("algebra_laws", [&] {
    Rng rng(seed + 40);
    int assoc = 0, ident = 0, inv = 0, proj = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
      const int n = 1 + t % 3, k = 1 + (t / 3) % 4;
      const JetQ p = random_rational_jet(rng, n, k, true), q = random_rational_jet(rng, n, k, false),
                 r = random_rational_jet(rng, n, k, false);
      const JetQ id = JetQ::identity(n, k);
      if (!(jet_compose(jet_compose(p, q), r) == jet_compose(p, jet_compose(q, r)))) ++assoc;
      if (!(jet_compose(p, id) == p) || !(jet_compose(id, q) == q)) ++ident;
      const JetQ pi = jet_invert(p);
      if (!(jet_compose(p, pi) == id) || !(jet_compose(pi, p) == id)) ++inv;
      for (int kk = 1; kk < k; ++kk)
        if (!(project(jet_compose(p, q), kk) == jet_compose(project(p, kk), project(q, kk)))) ++proj;
    }
    s.at_most("associativity", assoc, 0, std::to_string(trials) + " random rational jets");
    s.at_most("identity_laws", ident, 0);
    s.at_most("inverse_laws", inv, 0);
    s.at_most("projection_commutes", proj, 0);
  });
  s.guarded("invert_example", [&] {
    const Rational a(7, 3);
    JetQ p = JetQ::identity(1, 3);
    p.set(0, {2}, a);
    JetQ expect = JetQ::identity(1, 3);
    expect.set(0, {2}, -a);
    expect.set(0, {3}, 2 * a * a);
    s.holds("invert_example", jet_invert(p) == expect, "x + a x^2 -> x - a x^2 + 2 a^2 x^3");
  });
  s.guarded("chart_homomorphism", [&] {
    Rng rng(seed + 41);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Diffeo phi = Diffeo::analytic(random_field(square(), rng, 0.3, false));
      const Diffeo psi = Diffeo::analytic(random_field(square(), rng, 0.3, false));
      for (const Vector& x0 : {vec({0, 0}), vec({1, 0.3}), vec({0.6, 1})}) {
        const JetD lhs = taylor_extract(compose(psi, phi), x0, 2).jet;
        const JetD rhs = jet_compose(taylor_extract(psi, x0, 2).jet, taylor_extract(phi, x0, 2).jet);
        worst = std::max(worst, max_coeff_distance(lhs, rhs));
      }
    }
    s.at_most("chart_homomorphism", worst, 1e-3, "jet of a composite vs composite of jets");
  });
  s.guarded("flat_detection", [&] {
    const LieAlgebraCurve flat(BoundaryVanishingField(unit(), {ScalarExpr::constant(0.5)}, Weight::flat(1.0)));
    const MembershipReport f = diff_O_membership(Diffeo::flow_generated(flat, 1.0), BoundaryOrderSpec::uniform(unit(), 3, 2), 4, 1e-3);
    double dev = 0.0;
    for (const auto& p : f.points) dev = std::max(dev, p.deviation);
    s.at_most("flat_flow_order3", dev, 1e-3);
    const MembershipReport g = diff_O_membership(Diffeo::flow_generated(LieAlgebraCurve(logistic(0.2)), 1.0),
                                                 BoundaryOrderSpec::uniform(unit(), 1, 2), 4, 1e-3);
    s.holds("slack_flow_fails_order1", !g.pass, "linear part e^c != 1 at the boundary");
  });
}

void evolution_suite(Suite& s, std::uint64_t seed) {
  const LieAlgebraCurve curve(logistic(0.3));
  s.guarded("evolve_logistic", [&] {
    const EvolutionResult r = evolve(curve, 16);
    double worst = 0.0;
    for (std::size_t j = 0; j < r.times.size(); ++j)
      for (double x : {0.2, 0.5, 0.9})
        worst = std::max(worst, std::abs(r.snapshots[j].apply(vec({x}))(0) - sigmoid(logit(x) + 0.3 * r.times[j])));
    s.at_most("evolve_logistic", worst, 1e-6, "snapshots against the closed-form flow");
    int moved = 0;
    for (const Diffeo& d : r.snapshots)
      if (d.apply(vec({0.0}))(0) != 0.0 || d.apply(vec({1.0}))(0) != 1.0) ++moved;
    s.at_most("snapshots_fix_boundary", moved, 0);
  });
  s.guarded("logderiv_residual", [&] {
    const auto samples = unit().sample_interior(8, seed + 50);
    const double r64 = logderiv_residual(curve, 64, {}, samples);
    const double r128 = logderiv_residual(curve, 128, {}, samples);
    s.at_most("logderiv_residual", r64, 1e-4, "M = 64");
    s.in_range("logderiv_second_order", r64 / r128, 3.5, 4.5);
  });
  const BoundaryVanishingField family(unit(), {ScalarExpr::parse("p1")}, Weight::slack(), {-1.0, 3.0}, vec({0.5}));
  const ParametricFlowSpec spec(family, vec({0.0}), vec({1.0}));
  s.guarded("flow_map_closed_form", [&] {
    s.at_most("flow_map_closed_form", std::abs(flow_map(spec, vec({0.4}), 0.0, 2.0, vec({0.5}))(0) - sigmoid(0.8)),
              1e-6);
  });
  s.guarded("reversibility", [&] {
    Rng rng(seed + 51);
    std::uniform_real_distribution<double> up(0.0, 1.0), ut(-1.0, 3.0), ux(0.05, 0.95);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vector p = vec({up(rng)});
      const double t0 = ut(rng), t = ut(rng);
      const Vector x = vec({ux(rng)});
      worst = std::max(worst, (flow_map(spec, p, t, t0, flow_map(spec, p, t0, t, x)) - x).norm());
    }
    s.at_most("reversibility", worst, 1e-6);
  });
  s.guarded("sensitivity_closed_form", [&] {
    const FlowSensitivity r = flow_sensitivity(spec, vec({0.4}), 0.0, 2.0, vec({0.5}));
    const double sp = sigmoid(0.8) * (1 - sigmoid(0.8));
    const double err = std::max({std::abs(r.d_p(0, 0) - 2 * sp), std::abs(r.d_x0(0, 0) - 4 * sp),
                                 std::abs(r.d_t(0) - 0.4 * sp), std::abs(r.d_t0(0) + 0.4 * sp)});
    s.at_most("sensitivity_closed_form", err, 1e-4);
    double lo = 1e300, hi = 0.0;
    for (double q : {r.ratio_p, r.ratio_x0, r.ratio_t0, r.ratio_t}) {
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    s.in_range("sensitivity_ratio_min", lo, 3.5, 4.5);
    s.in_range("sensitivity_ratio_max", hi, 3.5, 4.5);
  });
  s.guarded("group_consistency", [&] {
    const ParametricFlowSpec autonomous(logistic(0.3));
    double worst = 0.0;
    for (auto [a, b] : {std::pair{0.5, 0.5}, std::pair{1.0, -1.0}, std::pair{0.25, 0.5}})
      worst = std::max(worst, group_flow_consistency(autonomous, Vector(), a, b, 16, seed).max_discrepancy);
    s.at_most("group_consistency", worst, 1e-6);
  });
}

}  // namespace

bool VerifyReport::pass() const { return failures() == 0; }

int VerifyReport::failures() const {
  int n = 0;
  for (const auto& c : checks) n += c.pass ? 0 : 1;
  return n;
}

nlohmann::json VerifyReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j = {{"suite", c.suite}, {"name", c.name}, {"pass", c.pass}, {"threshold", c.threshold},
                        {"detail", c.detail}};
    j["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return {{"suite", suite}, {"checks", arr}, {"passed", static_cast<int>(checks.size()) - failures()},
          {"failed", failures()}, {"pass", pass()}};
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names = {"geometry", "fields", "contraction", "diffeo", "jets", "evolution"};
  return names;
}

VerifyReport verify(const std::string& suite, std::uint64_t seed, const VerifyHooks& hooks) {
  const auto& names = verify_suites();
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
    throw DomainError("verify: unknown suite '" + suite + "'");
  VerifyReport report;
  report.suite = suite;
  for (const auto& name : names) {
    if (suite != "all" && suite != name) continue;
    Suite s(name, report);
    if (name == "geometry") geometry_suite(s, seed);
    else if (name == "fields") fields_suite(s, seed);
    else if (name == "contraction") contraction_suite(s, seed, hooks);
    else if (name == "diffeo") diffeo_suite(s, seed);
    else if (name == "jets") jets_suite(s, seed);
    else evolution_suite(s, seed);
  }
  return report;
}

}  // namespace diffk
