#pragma once

#include <cstdint>
#include <vector>

#include "diffk/contraction.hpp"
#include "diffk/diffeo.hpp"
#include "diffk/fields.hpp"

namespace diffk {

/// Snapshots eta(t_j), t_j = j/M, of the evolution of a curve, each a lazy
/// flow-generated element, plus the sampled right logarithmic derivative
/// residual max |d/dt eta(t)(x) - gamma(t)(eta(t)(x))| over interior
/// snapshot times (central differences).
struct EvolutionResult {
  std::vector<double> times;
  std::vector<Diffeo> snapshots;
  double logderiv_residual = 0.0;
  int residual_samples = 0;
};

/// The residual is measured along one Picard trajectory per sample point,
/// solved on a grid refined to a multiple of M so that the snapshot times
/// are grid nodes.
EvolutionResult evolve(const LieAlgebraCurve& curve, int snapshots = 64, const FlowSettings& settings = {},
                       int residual_samples = 16, std::uint64_t seed = 0);

/// Residual part of evolve() alone.
double logderiv_residual(const LieAlgebraCurve& curve, int snapshots, const FlowSettings& settings,
                         const std::vector<Vector>& samples);

/// eta(1). Its certificate exp(theta) - 1 is a Gronwall-type heuristic; use
/// Diffeo::recertified() to validate it by sampling.
Diffeo evol_r(const LieAlgebraCurve& curve, const FlowSettings& settings = {});

/// A field family f(p, t, x) over the box P = [p_lo, p_hi] and the field's
/// time interval J. Its certificate is sampled once, uniformly over P, so
/// the panel layout of a flow does not jump with p.
class ParametricFlowSpec {
 public:
  ParametricFlowSpec(BoundaryVanishingField family, Vector p_lo, Vector p_hi, FlowSettings settings = {},
                     int box_samples = 8, std::uint64_t seed = 0);
  /// Parameter-free family.
  explicit ParametricFlowSpec(BoundaryVanishingField field, FlowSettings settings = {});

  const BoundaryVanishingField& family() const noexcept { return family_; }
  const ConvexBody& body() const noexcept { return family_.body(); }
  const TimeInterval& time() const noexcept { return family_.time(); }
  const Vector& p_lo() const noexcept { return p_lo_; }
  const Vector& p_hi() const noexcept { return p_hi_; }
  const FlowSettings& settings() const noexcept { return settings_; }
  /// >= sup over p in P and t in J of Lip f(p, t, .).
  double theta() const noexcept { return theta_; }

  bool in_box(const Vector& p) const;
  /// f(p, ., .) with the uniform certificate. Throws DomainError outside P.
  BoundaryVanishingField field_at(const Vector& p) const;

 private:
  BoundaryVanishingField family_;
  Vector p_lo_, p_hi_;
  FlowSettings settings_;
  double theta_ = 0.0;
};

/// Panels used for a horizon whose rescaled certificate is theta.
int panel_count(double theta);

/// Phi(p, t0, t, x0) = y(t) for y' = f(p, s, y), y(t0) = x0. The rescaled
/// curve tau -> (t - t0) f(p, t0 + tau (t - t0), .) is split into
/// ceil(theta/0.3) panels when its certificate exceeds 1/3. t < t0 is
/// allowed; t = t0 returns x0.
Vector flow_map(const ParametricFlowSpec& spec, const Vector& p, double t0, double t, const Vector& x0);

struct FlowTrajectory {
  std::vector<double> times;  // original time, from t0 to t
  Matrix states;              // n x times.size()
  int panels = 1;
};

/// The grid trajectory behind flow_map(), panels concatenated.
FlowTrajectory flow_trajectory(const ParametricFlowSpec& spec, const Vector& p, double t0, double t,
                               const Vector& x0);

struct FlowSensitivity {
  Matrix d_p;   // n x m
  Matrix d_x0;  // n x n
  Vector d_t0;  // n
  Vector d_t;   // n
  // |D(h) - D(h/2)| / |D(h/2) - D(h/4)|, about 4 for central differences;
  // NaN when both differences vanish.
  double ratio_p = 0.0, ratio_x0 = 0.0, ratio_t0 = 0.0, ratio_t = 0.0;
  double step = 0.0;
};

/// Central differences of flow_map at steps h (1 + |.|), halved twice; the
/// returned values are Richardson-extrapolated from the two finer levels.
/// Throws DomainError when a perturbed argument leaves P, J or K.
FlowSensitivity flow_sensitivity(const ParametricFlowSpec& spec, const Vector& p, double t0, double t,
                                 const Vector& x0, double h = 1e-3);

struct GroupConsistency {
  double max_discrepancy = 0.0;
  int samples = 0;
};

/// For an autonomous field, compares the flow for s + t with the flow for t
/// after the flow for s on sampled points. Negative durations run
/// backwards; |s|, |t| and |s + t| must fit in the time interval.
GroupConsistency group_flow_consistency(const ParametricFlowSpec& spec, const Vector& p, double s, double t,
                                        int samples = 32, std::uint64_t seed = 0);

}  // namespace diffk
