#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "diffk/expr.hpp"
#include "diffk/geometry.hpp"

namespace diffk {

/// Spatial factor that forces a field to vanish on the boundary.
///   SlackProduct: product of the scaled facet slacks (ball: (r - |x-c|)/r).
///   FlatExp:      exp(-alpha / d(x)), set to 0 on the boundary; all
///                 derivatives vanish there.
///   None:         1; the base itself must vanish on the boundary.
struct Weight {
  enum class Kind { SlackProduct, FlatExp, None };
  Kind kind = Kind::SlackProduct;
  double alpha = 1.0;

  static Weight slack() { return {Kind::SlackProduct, 1.0}; }
  static Weight flat(double alpha) { return {Kind::FlatExp, alpha}; }
  static Weight none() { return {Kind::None, 1.0}; }
};

struct TimeInterval {
  double begin = 0.0;
  double end = 1.0;
  bool contains(double t) const noexcept { return t >= begin && t <= end; }
};

struct FieldOptions {
  int theta_time_samples = 5;
  int theta_space_samples = 256;
  std::uint64_t seed = 0;
  /// Skip sampling and use this certificate instead.
  std::optional<double> theta;
};

/// Time-dependent vector field f(t, x) = a * g(s(t), x; p) * w(x) on K that
/// vanishes on the boundary, with a sampled Lipschitz certificate
/// theta_bound >= sup_t Lip(f(t, .)). The affine clock s(t) and amplitude a
/// are identity/1 unless the field was produced by rescaled().
class BoundaryVanishingField {
 public:
  BoundaryVanishingField(ConvexBody body, std::vector<ScalarExpr> base, Weight weight,
                         TimeInterval time = {}, Vector params = {}, const FieldOptions& opts = {});

  /// The zero field on K.
  static BoundaryVanishingField zero(const ConvexBody& body, TimeInterval time = {});

  /// f(t, x); throws DomainError when t or x is outside the domain.
  Vector eval(double t, const Vector& x) const;
  double weight_at(const Vector& x) const;

  const ConvexBody& body() const noexcept { return body_; }
  int dimension() const noexcept { return body_.dimension(); }
  const std::vector<ScalarExpr>& base() const noexcept { return base_; }
  const Weight& weight() const noexcept { return weight_; }
  const TimeInterval& time() const noexcept { return time_; }
  const Vector& params() const noexcept { return params_; }
  double theta_bound() const noexcept { return theta_; }
  bool is_autonomous() const;
  int param_count() const;

  /// The curve tau -> (t1 - t0) f(t0 + tau (t1 - t0), .) on [0, 1]. Its
  /// certificate is |t1 - t0| * theta_bound(). t1 < t0 is allowed.
  BoundaryVanishingField rescaled(double t0, double t1) const;

  /// Same expressions with parameters rebound; the certificate is resampled
  /// unless opts.theta is given.
  BoundaryVanishingField with_params(Vector params, const FieldOptions& opts = {}) const;

 private:
  BoundaryVanishingField() = default;
  double clock(double t) const noexcept { return clock_offset_ + clock_slope_ * t; }

  ConvexBody body_ = ConvexBody::interval(0.0, 1.0);
  std::vector<ScalarExpr> base_;
  Weight weight_;
  TimeInterval time_;
  Vector params_;
  double clock_offset_ = 0.0;
  double clock_slope_ = 1.0;
  double amplitude_ = 1.0;
  double theta_ = 0.0;
};

/// Sampled sup over (t, x) of |D_x f(t, x)|_op, inflated by 1.05. Space
/// samples are random interior points plus boundary samples pulled 1e-4 of
/// the way toward the interior point.
double lipschitz_seminorm(const BoundaryVanishingField& field, int t_samples, int x_samples,
                          std::uint64_t seed);

struct PointwiseBoundReport {
  double max_ratio = 0.0;  // max |f(t,x)| / (theta d(x))
  int samples = 0;
  bool pass = true;
};

/// Checks |f(t, x)| <= theta_bound * d(x) on sampled x.
PointwiseBoundReport verify_pointwise_bound(const BoundaryVanishingField& field, double t,
                                            int samples, std::uint64_t seed = 1);

/// A boundary-vanishing curve on [0, 1] whose certificate is at most 1/3.
class LieAlgebraCurve {
 public:
  /// Throws CertificateError if field.theta_bound() > 1/3 or the field is not
  /// defined on [0, 1].
  explicit LieAlgebraCurve(BoundaryVanishingField field);
  /// Reparametrizes [t0, t1] of `field` onto [0, 1].
  static LieAlgebraCurve over(const BoundaryVanishingField& field, double t0, double t1);

  const BoundaryVanishingField& field() const noexcept { return field_; }
  double theta() const noexcept { return field_.theta_bound(); }
  Vector operator()(double t, const Vector& x) const { return field_.eval(t, x); }

 private:
  BoundaryVanishingField field_;
};

inline constexpr double kMaxCurveTheta = 1.0 / 3.0;

/// {"base":[...], "weight":{"kind":"slack"|"flat","alpha":a} | null, "time":[ta,tb], "params":[...]}
BoundaryVanishingField field_from_json(const nlohmann::json& j, const ConvexBody& body,
                                       const FieldOptions& opts = {});
nlohmann::json field_to_json(const BoundaryVanishingField& field);

}  // namespace diffk
