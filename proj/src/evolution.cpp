#include "diffk/evolution.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "diffk/errors.hpp"

namespace diffk {

namespace {

constexpr double kPanelTheta = 0.3;

void check_time(const TimeInterval& j, double t, const char* what) {
  if (!j.contains(t)) {
    throw DomainError(std::string(what) + ": time " + std::to_string(t) + " is outside [" +
                      std::to_string(j.begin) + ", " + std::to_string(j.end) + "]");
  }
}

// Panel boundaries a_0 = t0 < ... < a_P = t (or decreasing).
std::vector<double> panel_edges(double t0, double t, int panels) {
  std::vector<double> edges(static_cast<std::size_t>(panels + 1));
  for (int i = 0; i <= panels; ++i) edges[static_cast<std::size_t>(i)] = t0 + (t - t0) * i / panels;
  edges.back() = t;
  return edges;
}

double matrix_gap(const Matrix& a, const Matrix& b) { return (a - b).norm(); }

}  // namespace

double logderiv_residual(const LieAlgebraCurve& curve, int snapshots, const FlowSettings& settings,
                         const std::vector<Vector>& samples) {
  if (snapshots < 2) throw DomainError("logderiv_residual: need at least 2 snapshot intervals");
  const int per = (settings.grid + snapshots - 1) / snapshots;
  const int grid = per * snapshots;
  const double m = snapshots;
  double worst = 0.0;
  for (const Vector& x : samples) {
    if (curve.field().body().distance_to_boundary(x) == 0.0) continue;
    const FlowResult r = picard_solve(picard_problem(curve, x), grid, settings.tol, settings.max_iter);
    for (int j = 1; j < snapshots; ++j) {
      const Eigen::Index i = static_cast<Eigen::Index>(j) * per;
      const Vector dy = (r.states.col(i + per) - r.states.col(i - per)) * (0.5 * m);
      worst = std::max(worst, (dy - curve(j / m, r.states.col(i))).norm());
    }
  }
  return worst;
}

EvolutionResult evolve(const LieAlgebraCurve& curve, int snapshots, const FlowSettings& settings,
                       int residual_samples, std::uint64_t seed) {
  if (snapshots < 2) throw DomainError("evolve: need at least 2 snapshot intervals");
  EvolutionResult out;
  for (int j = 0; j <= snapshots; ++j) {
    const double t = j == snapshots ? 1.0 : static_cast<double>(j) / snapshots;
    out.times.push_back(t);
    out.snapshots.push_back(j == 0 ? Diffeo::identity(curve.field().body())
                                   : Diffeo::flow_generated(curve, t, settings));
  }
  const auto samples = curve.field().body().sample_interior(residual_samples, seed);
  out.logderiv_residual = logderiv_residual(curve, snapshots, settings, samples);
  out.residual_samples = static_cast<int>(samples.size());
  return out;
}

Diffeo evol_r(const LieAlgebraCurve& curve, const FlowSettings& settings) {
  return Diffeo::flow_generated(curve, 1.0, settings);
}

ParametricFlowSpec::ParametricFlowSpec(BoundaryVanishingField family, Vector p_lo, Vector p_hi,
                                       FlowSettings settings, int box_samples, std::uint64_t seed)
    : family_(std::move(family)), p_lo_(std::move(p_lo)), p_hi_(std::move(p_hi)), settings_(settings) {
  const Eigen::Index m = p_lo_.size();
  if (p_hi_.size() != m) throw DimensionError("ParametricFlowSpec: box bounds differ in size");
  if (m < family_.param_count())
    throw DimensionError("ParametricFlowSpec: the field uses " + std::to_string(family_.param_count()) +
                         " parameters but the box has " + std::to_string(m));
  if ((p_hi_.array() < p_lo_.array()).any()) throw DomainError("ParametricFlowSpec: empty parameter box");
  if (m == 0) {
    theta_ = family_.theta_bound();
    return;
  }
  std::vector<Vector> probes;
  if (m <= 6) {
    for (int mask = 0; mask < (1 << m); ++mask) {
      Vector c(m);
      for (Eigen::Index i = 0; i < m; ++i) c(i) = (mask >> i) & 1 ? p_hi_(i) : p_lo_(i);
      probes.push_back(c);
    }
  }
  probes.push_back(0.5 * (p_lo_ + p_hi_));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < box_samples; ++s) {
    Vector c(m);
    for (Eigen::Index i = 0; i < m; ++i) c(i) = p_lo_(i) + u(rng) * (p_hi_(i) - p_lo_(i));
    probes.push_back(c);
  }
  FieldOptions opts;
  opts.seed = seed;
  for (const Vector& p : probes) theta_ = std::max(theta_, family_.with_params(p, opts).theta_bound());
}

ParametricFlowSpec::ParametricFlowSpec(BoundaryVanishingField field, FlowSettings settings)
    : ParametricFlowSpec(field, field.params(), field.params(), settings) {}

bool ParametricFlowSpec::in_box(const Vector& p) const {
  return p.size() == p_lo_.size() && (p.array() >= p_lo_.array()).all() && (p.array() <= p_hi_.array()).all();
}

BoundaryVanishingField ParametricFlowSpec::field_at(const Vector& p) const {
  if (!in_box(p)) throw DomainError("flow: parameter is outside the box P");
  if (p.size() == 0) return family_;
  FieldOptions opts;
  opts.theta = theta_;
  return family_.with_params(p, opts);
}

int panel_count(double theta) {
  if (theta <= kMaxCurveTheta) return 1;
  return static_cast<int>(std::ceil(theta / kPanelTheta));
}

FlowTrajectory flow_trajectory(const ParametricFlowSpec& spec, const Vector& p, double t0, double t,
                               const Vector& x0) {
  const BoundaryVanishingField f = spec.field_at(p);
  check_time(spec.time(), t0, "flow");
  check_time(spec.time(), t, "flow");
  if (!spec.body().contains(x0)) throw DomainError("flow: x0 is not in K");

  FlowTrajectory out;
  const int panels = panel_count(std::abs(t - t0) * spec.theta());
  out.panels = panels;
  const auto edges = panel_edges(t0, t, panels);
  const int grid = spec.settings().grid;
  out.states.resize(x0.size(), static_cast<Eigen::Index>(panels) * grid + 1);
  out.states.col(0) = x0;
  out.times.push_back(t0);
  Vector x = x0;
  Eigen::Index col = 1;
  for (int i = 0; i < panels; ++i) {
    const double a = edges[static_cast<std::size_t>(i)], b = edges[static_cast<std::size_t>(i) + 1];
    if (t == t0 || spec.body().distance_to_boundary(x) == 0.0) {
      for (int k = 1; k <= grid; ++k, ++col) {
        out.states.col(col) = x;
        out.times.push_back(a + (b - a) * k / grid);
      }
      continue;
    }
    const LieAlgebraCurve curve(f.rescaled(a, b));
    const FlowResult r = picard_solve(picard_problem(curve, x), grid, spec.settings().tol, spec.settings().max_iter);
    for (int k = 1; k <= grid; ++k, ++col) {
      out.states.col(col) = r.states.col(k);
      out.times.push_back(k == grid ? b : a + (b - a) * r.times(k));
    }
    x = r.final_state();
  }
  return out;
}

namespace {

Vector flow_map_panels(const ParametricFlowSpec& spec, const Vector& p, double t0, double t, const Vector& x0,
                       int panels) {
  const BoundaryVanishingField f = spec.field_at(p);
  check_time(spec.time(), t0, "flow");
  check_time(spec.time(), t, "flow");
  if (!spec.body().contains(x0)) throw DomainError("flow: x0 is not in K");
  if (t == t0) return x0;
  const auto edges = panel_edges(t0, t, panels);
  Vector x = x0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (spec.body().distance_to_boundary(x) == 0.0) break;
    const LieAlgebraCurve curve(f.rescaled(edges[i], edges[i + 1]));
    x = picard_solve(picard_problem(curve, x), spec.settings().grid, spec.settings().tol, spec.settings().max_iter)
            .final_state();
  }
  return x;
}

}  // namespace

Vector flow_map(const ParametricFlowSpec& spec, const Vector& p, double t0, double t, const Vector& x0) {
  return flow_map_panels(spec, p, t0, t, x0, panel_count(std::abs(t - t0) * spec.theta()));
}

FlowSensitivity flow_sensitivity(const ParametricFlowSpec& spec, const Vector& p, double t0, double t,
                                 const Vector& x0, double h) {
  if (!(h > 0.0)) throw DomainError("flow_sensitivity: step must be positive");
  if (!spec.body().contains(x0) || spec.body().distance_to_boundary(x0) == 0.0)
    throw DomainError("flow_sensitivity: x0 must be an interior point");
  const Eigen::Index n = x0.size(), m = p.size();
  const double hp = h * (1.0 + p.norm()), hx = h * (1.0 + x0.norm());
  const double ht0 = h * (1.0 + std::abs(t0)), ht = h * (1.0 + std::abs(t));

  // largest perturbations must stay inside P, K and J
  for (Eigen::Index i = 0; i < m; ++i)
    for (double s : {-hp, hp}) {
      Vector q = p;
      q(i) += s;
      if (!spec.in_box(q)) throw DomainError("flow_sensitivity: perturbed parameter leaves P; reduce h");
    }
  for (Eigen::Index i = 0; i < n; ++i)
    for (double s : {-hx, hx}) {
      Vector y = x0;
      y(i) += s;
      if (!spec.body().contains(y)) throw DomainError("flow_sensitivity: perturbed x0 leaves K; reduce h");
    }
  for (double s : {-1.0, 1.0}) {
    if (!spec.time().contains(t0 + s * ht0) || !spec.time().contains(t + s * ht))
      throw DomainError("flow_sensitivity: perturbed time leaves J; reduce h");
  }

  // one panel layout for every evaluation, so the differenced map is smooth
  const int panels = panel_count((std::abs(t - t0) + ht0 + ht) * spec.theta());
  auto phi = [&](const Vector& pp, double a, double b, const Vector& x) {
    return flow_map_panels(spec, pp, a, b, x, panels);
  };

  struct Level {
    Matrix dp, dx, dt0, dt;
  };
  auto level = [&](double scale) {
    Level l{Matrix(n, m), Matrix(n, n), Matrix(n, 1), Matrix(n, 1)};
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = scale * hp;
      Vector a = p, b = p;
      a(i) += s;
      b(i) -= s;
      l.dp.col(i) = (phi(a, t0, t, x0) - phi(b, t0, t, x0)) / (2.0 * s);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = scale * hx;
      Vector a = x0, b = x0;
      a(i) += s;
      b(i) -= s;
      l.dx.col(i) = (phi(p, t0, t, a) - phi(p, t0, t, b)) / (2.0 * s);
    }
    const double s0 = scale * ht0, s1 = scale * ht;
    l.dt0.col(0) = (phi(p, t0 + s0, t, x0) - phi(p, t0 - s0, t, x0)) / (2.0 * s0);
    l.dt.col(0) = (phi(p, t0, t + s1, x0) - phi(p, t0, t - s1, x0)) / (2.0 * s1);
    return l;
  };
  const Level l0 = level(1.0), l1 = level(0.5), l2 = level(0.25);

  auto ratio = [](const Matrix& a, const Matrix& b, const Matrix& c) {
    const double den = matrix_gap(b, c);
    if (den <= 1e-15) return std::numeric_limits<double>::quiet_NaN();
    return matrix_gap(a, b) / den;
  };
  auto extrapolate = [](const Matrix& coarse, const Matrix& fine) -> Matrix { return (4.0 * fine - coarse) / 3.0; };

  FlowSensitivity out;
  out.d_p = extrapolate(l1.dp, l2.dp);
  out.d_x0 = extrapolate(l1.dx, l2.dx);
  out.d_t0 = extrapolate(l1.dt0, l2.dt0).col(0);
  out.d_t = extrapolate(l1.dt, l2.dt).col(0);
  out.ratio_p = ratio(l0.dp, l1.dp, l2.dp);
  out.ratio_x0 = ratio(l0.dx, l1.dx, l2.dx);
  out.ratio_t0 = ratio(l0.dt0, l1.dt0, l2.dt0);
  out.ratio_t = ratio(l0.dt, l1.dt, l2.dt);
  out.step = h;
  return out;
}

GroupConsistency group_flow_consistency(const ParametricFlowSpec& spec, const Vector& p, double s, double t,
                                        int samples, std::uint64_t seed) {
  if (!spec.family().is_autonomous()) throw DomainError("group_flow_consistency: the field must be autonomous");
  const TimeInterval& j = spec.time();
  auto run = [&](double tau, const Vector& x) -> Vector {
    if (tau == 0.0) return x;
    if (std::abs(tau) > j.end - j.begin) throw DomainError("group_flow_consistency: duration exceeds the time interval");
    const double ref = tau > 0.0 ? j.begin : j.end;
    return flow_map(spec, p, ref, ref + tau, x);
  };
  GroupConsistency out;
  for (const Vector& x : spec.body().sample_interior(samples, seed)) {
    out.max_discrepancy = std::max(out.max_discrepancy, (run(s + t, x) - run(t, run(s, x))).norm());
    ++out.samples;
  }
  return out;
}

}  // namespace diffk
