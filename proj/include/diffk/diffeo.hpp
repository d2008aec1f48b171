#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "diffk/contraction.hpp"
#include "diffk/fields.hpp"
#include "diffk/geometry.hpp"

namespace diffk {

/// The displacement gamma = phi - id of a group element, with its spatial
/// Jacobian. Implementations are immutable.
class Displacement {
 public:
  virtual ~Displacement() = default;
  virtual Vector value(const Vector& x) const = 0;
  /// Defaults to finite differences of value().
  virtual Matrix jacobian(const Vector& x) const;
  virtual const ConvexBody& body() const = 0;
};

/// A boundary-fixing diffeomorphism phi = id + gamma of K, stored
/// extensionally: an evaluator for gamma and its Jacobian plus a certificate
/// lip_gamma >= Lip(gamma). Cheap to copy; all copies share the evaluator.
class Diffeo {
 public:
  enum class Provenance { Identity, Analytic, FlowGenerated, Composite, Inverse };

  static Diffeo identity(const ConvexBody& body);
  /// gamma(x) = field(t, x); Lip certificate from the field.
  static Diffeo analytic(const BoundaryVanishingField& field, double t = 0.0);
  /// x -> y(time) for y' = curve(s, y), y(0) = x, 0 <= time <= 1. The
  /// certificate exp(theta * time) - 1 is a Gronwall bound given the curve's
  /// certificate.
  static Diffeo flow_generated(const LieAlgebraCurve& curve, double time, const FlowSettings& settings = {});
  /// Wraps a custom displacement.
  static Diffeo from_displacement(std::shared_ptr<const Displacement> gamma, double lip_gamma,
                                  Provenance provenance = Provenance::Analytic);

  const ConvexBody& body() const { return gamma_->body(); }
  Provenance provenance() const noexcept { return provenance_; }
  double lip_gamma() const noexcept { return lip_gamma_; }
  const std::optional<double>& jacobian_margin() const noexcept { return margin_; }

  /// x + gamma(x). Throws DomainError if x is not in K or the image escapes
  /// K (flow elements get 1e-9 of slack, pulled back onto K).
  Vector apply(const Vector& x) const;
  Vector operator()(const Vector& x) const { return apply(x); }
  /// gamma(x), x in K.
  Vector displacement(const Vector& x) const;
  /// D gamma(x).
  Matrix displacement_jacobian(const Vector& x) const;
  /// D phi(x) = I + D gamma(x).
  Matrix jacobian(const Vector& x) const;

  /// Copy with jacobian_margin = min |det D phi| over `samples` interior
  /// points and lip_gamma raised to the sampled Lipschitz estimate if the
  /// latter is larger.
  Diffeo recertified(int samples = 200, std::uint64_t seed = 0) const;

  std::shared_ptr<const Displacement> displacement_map() const { return gamma_; }

 private:
  Diffeo(std::shared_ptr<const Displacement> gamma, double lip, Provenance provenance);

  std::shared_ptr<const Displacement> gamma_;
  double lip_gamma_ = 0.0;
  std::optional<double> margin_;
  Provenance provenance_ = Provenance::Identity;
};

const char* provenance_name(Diffeo::Provenance p);

struct ChartReport {
  enum class Injectivity { LipschitzCertified, GridHeuristic, Failed };

  bool boundary_ok = false;        // gamma = 0 on boundary samples
  bool jacobian_ok = false;        // det(I + gamma') > 0 on the grid
  bool interior_point_ok = false;  // x0 + gamma(x0) in the interior
  Injectivity injectivity = Injectivity::Failed;
  double jacobian_margin = 0.0;    // min det over the grid
  double lipschitz_estimate = 0.0;
  double min_image_ratio = 0.0;    // min |phi(x)-phi(y)| / |x-y| over grid pairs
  int grid_points = 0;
  std::string detail;

  bool passed() const {
    return boundary_ok && jacobian_ok && interior_point_ok && injectivity != Injectivity::Failed;
  }
};

const char* injectivity_name(ChartReport::Injectivity i);

/// Tests whether gamma lies in the global chart: D(id + gamma) invertible on
/// K, x0 + gamma(x0) in the interior and id + gamma injective. Injectivity is
/// certified only through Lip(gamma) < 1 (sampled estimate); otherwise the
/// grid images are compared pairwise.
ChartReport chart_membership(const Diffeo& candidate, int grid_density, const Vector& x0_interior,
                             int boundary_samples = 200, std::uint64_t seed = 0);

/// psi o phi, i.e. x -> gamma_psi(x + gamma_phi(x)) + gamma_phi(x). Jacobian
/// by the chain rule; certificate Lip_psi (1 + Lip_phi) + Lip_phi.
Diffeo compose(const Diffeo& psi, const Diffeo& phi);

struct InverseOptions {
  double tol = 1e-13;
  int max_iter = 500;
};

struct PointInverse {
  Vector point;
  int iterations = 0;
};

/// Solves phi(x) = y by x <- y - gamma(x) from x = y, a contraction with
/// factor lip_gamma. Returns y unchanged (zero iterations) on the boundary.
/// Throws CertificateError when lip_gamma >= 1, ConvergenceError after
/// max_iter.
PointInverse invert_at(const Diffeo& phi, const Vector& y, const InverseOptions& opts = {});

/// phi^{-1}, evaluated lazily through invert_at; Jacobian
/// (I + gamma'(phi^{-1}(y)))^{-1} - I; certificate Lip/(1 - Lip).
Diffeo invert(const Diffeo& phi, const InverseOptions& opts = {});

/// z -> f_z with a Lipschitz certificate for gamma uniform in z.
struct DiffeoFamily {
  std::function<Diffeo(const Vector& z)> element;
  double lip_gamma = 0.0;
};

/// g(z, y) = f_z^{-1}(y).
Vector parametric_inverse(const DiffeoFamily& family, const Vector& z, const Vector& y,
                          const InverseOptions& opts = {});

struct InverseSensitivity {
  Vector value;  // g(z, y)
  Matrix d_z;    // -(f_z'(g))^{-1} D_z f(z, g)
  Matrix d_y;    // (f_z'(g))^{-1}
};

InverseSensitivity parametric_inverse_sensitivity(const DiffeoFamily& family, const Vector& z, const Vector& y,
                                                  double h = 1e-5, const InverseOptions& opts = {});

/// max |a(x) - b(x)| over the points.
double sup_distance(const Diffeo& a, const Diffeo& b, const std::vector<Vector>& points);

}  // namespace diffk
