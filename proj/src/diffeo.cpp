#include "diffk/diffeo.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "diffk/errors.hpp"
#include "diffk/numdiff.hpp"

namespace diffk {

namespace {

constexpr double kFlowImageSlack = 1e-9;
constexpr double kLipInflation = 1.05;

class ZeroDisplacement final : public Displacement {
 public:
  explicit ZeroDisplacement(ConvexBody body) : body_(std::move(body)) {}
  Vector value(const Vector& x) const override { return Vector::Zero(x.size()); }
  Matrix jacobian(const Vector& x) const override { return Matrix::Zero(x.size(), x.size()); }
  const ConvexBody& body() const override { return body_; }

 private:
  ConvexBody body_;
};

class FieldDisplacement final : public Displacement {
 public:
  FieldDisplacement(BoundaryVanishingField field, double t) : field_(std::move(field)), t_(t) {}
  Vector value(const Vector& x) const override { return field_.eval(t_, x); }
  const ConvexBody& body() const override { return field_.body(); }

 private:
  BoundaryVanishingField field_;
  double t_;
};

class FlowDisplacement final : public Displacement {
 public:
  FlowDisplacement(const LieAlgebraCurve& curve, double time, const FlowSettings& settings)
      : segment_(curve.field().rescaled(0.0, time)), time_(time), settings_(settings) {}

  Vector value(const Vector& x) const override {
    if (time_ == 0.0 || segment_.field().body().distance_to_boundary(x) == 0.0) return Vector::Zero(x.size());
    const auto result = picard_solve(picard_problem(segment_, x), settings_.grid, settings_.tol, settings_.max_iter);
    return result.final_state() - x;
  }
  const ConvexBody& body() const override { return segment_.field().body(); }

 private:
  LieAlgebraCurve segment_;
  double time_;
  FlowSettings settings_;
};

class ComposedDisplacement final : public Displacement {
 public:
  ComposedDisplacement(Diffeo outer, Diffeo inner) : outer_(std::move(outer)), inner_(std::move(inner)) {}

  Vector value(const Vector& x) const override {
    const Vector g = inner_.displacement(x);
    return outer_.displacement(x + g) + g;
  }
  Matrix jacobian(const Vector& x) const override {
    const Vector g = inner_.displacement(x);
    const Matrix ji = inner_.displacement_jacobian(x);
    const Matrix jo = outer_.displacement_jacobian(x + g);
    return jo * (Matrix::Identity(x.size(), x.size()) + ji) + ji;
  }
  const ConvexBody& body() const override { return inner_.body(); }

 private:
  Diffeo outer_;
  Diffeo inner_;
};

class InverseDisplacement final : public Displacement {
 public:
  InverseDisplacement(Diffeo phi, InverseOptions opts) : phi_(std::move(phi)), opts_(opts) {}

  Vector value(const Vector& y) const override { return invert_at(phi_, y, opts_).point - y; }
  Matrix jacobian(const Vector& y) const override {
    const Vector x = invert_at(phi_, y, opts_).point;
    const Matrix j = phi_.jacobian(x);
    Eigen::FullPivLU<Matrix> lu(j);
    if (!lu.isInvertible()) throw CertificateError("invert: D phi is singular at the preimage");
    return lu.inverse() - Matrix::Identity(y.size(), y.size());
  }
  const ConvexBody& body() const override { return phi_.body(); }

 private:
  Diffeo phi_;
  InverseOptions opts_;
};

// Largest s in [0, 1] with from + s (to - from) in K, for from in K.
Vector pull_back_into(const ConvexBody& body, const Vector& from, const Vector& to) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (body.contains(from + mid * (to - from))) lo = mid;
    else hi = mid;
  }
  return from + lo * (to - from);
}

}  // namespace

Matrix Displacement::jacobian(const Vector& x) const {
  return fd_jacobian([this](const Vector& y) { return value(y); }, body(), x);
}

const char* provenance_name(Diffeo::Provenance p) {
  switch (p) {
    case Diffeo::Provenance::Identity:
      return "identity";
    case Diffeo::Provenance::Analytic:
      return "analytic";
    case Diffeo::Provenance::FlowGenerated:
      return "flow";
    case Diffeo::Provenance::Composite:
      return "composite";
    case Diffeo::Provenance::Inverse:
      return "inverse";
  }
  return "?";
}

const char* injectivity_name(ChartReport::Injectivity i) {
  switch (i) {
    case ChartReport::Injectivity::LipschitzCertified:
      return "LipschitzCertified";
    case ChartReport::Injectivity::GridHeuristic:
      return "GridHeuristic";
    case ChartReport::Injectivity::Failed:
      return "Failed";
  }
  return "?";
}

Diffeo::Diffeo(std::shared_ptr<const Displacement> gamma, double lip, Provenance provenance)
    : gamma_(std::move(gamma)), lip_gamma_(lip), provenance_(provenance) {}

Diffeo Diffeo::identity(const ConvexBody& body) {
  Diffeo d(std::make_shared<ZeroDisplacement>(body), 0.0, Provenance::Identity);
  d.margin_ = 1.0;
  return d;
}

Diffeo Diffeo::analytic(const BoundaryVanishingField& field, double t) {
  if (!field.time().contains(t)) throw DomainError("Diffeo::analytic: time outside the field's interval");
  return Diffeo(std::make_shared<FieldDisplacement>(field, t), field.theta_bound(), Provenance::Analytic);
}

Diffeo Diffeo::flow_generated(const LieAlgebraCurve& curve, double time, const FlowSettings& settings) {
  if (!(time >= 0.0 && time <= 1.0)) throw DomainError("Diffeo::flow_generated: time must lie in [0, 1]");
  return Diffeo(std::make_shared<FlowDisplacement>(curve, time, settings), std::expm1(curve.theta() * time),
                Provenance::FlowGenerated);
}

Diffeo Diffeo::from_displacement(std::shared_ptr<const Displacement> gamma, double lip_gamma, Provenance provenance) {
  if (!gamma) throw DomainError("Diffeo::from_displacement: null displacement");
  return Diffeo(std::move(gamma), lip_gamma, provenance);
}

Vector Diffeo::displacement(const Vector& x) const {
  if (!body().contains(x)) throw DomainError("Diffeo: point is not in K");
  return gamma_->value(x);
}

Matrix Diffeo::displacement_jacobian(const Vector& x) const {
  if (!body().contains(x)) throw DomainError("Diffeo: point is not in K");
  return gamma_->jacobian(x);
}

Matrix Diffeo::jacobian(const Vector& x) const {
  return Matrix::Identity(x.size(), x.size()) + displacement_jacobian(x);
}

Vector Diffeo::apply(const Vector& x) const {
  Vector y = x + displacement(x);
  if (body().contains(y)) return y;
  const bool numerical = provenance_ != Provenance::Analytic && provenance_ != Provenance::Identity;
  if (numerical && body().scaled_slacks(y).minCoeff() >= -kFlowImageSlack) return pull_back_into(body(), x, y);
  throw DomainError("Diffeo: image escapes K; the element is not a self-map of K");
}

Diffeo Diffeo::recertified(int samples, std::uint64_t seed) const {
  Diffeo out(*this);
  double margin = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  for (const Vector& x : body().sample_interior(samples, seed)) {
    const Matrix jg = displacement_jacobian(x);
    margin = std::min(margin, std::abs((Matrix::Identity(x.size(), x.size()) + jg).determinant()));
    lip = std::max(lip, operator_norm(jg));
  }
  out.margin_ = margin;
  out.lip_gamma_ = std::max(lip_gamma_, kLipInflation * lip);
  return out;
}

ChartReport chart_membership(const Diffeo& candidate, int grid_density, const Vector& x0, int boundary_samples,
                             std::uint64_t seed) {
  const ConvexBody& body = candidate.body();
  const int n = body.dimension();
  ChartReport rep;
  std::ostringstream detail;

  // (0) vanishing on the boundary
  rep.boundary_ok = true;
  for (const Vector& b : body.sample_boundary(boundary_samples, seed)) {
    if (candidate.displacement(b).cwiseAbs().maxCoeff() != 0.0) {
      rep.boundary_ok = false;
      detail << "gamma does not vanish at boundary point (" << b.transpose() << "); ";
      break;
    }
  }

  // interior grid plus boundary points pulled slightly inward
  std::vector<Vector> grid;
  const Vector& c = body.interior_point();
  const double r = body.bounding_radius();
  const int g = std::max(grid_density, 2);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (bool more = true; more;) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = c(i) - r + 2.0 * r * idx[static_cast<std::size_t>(i)] / (g - 1);
    if (body.contains(x) && body.distance_to_boundary(x) > 0.0) grid.push_back(x);
    more = false;
    for (int i = 0; i < n; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < g) {
        more = true;
        break;
      }
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  if (grid.empty()) grid.push_back(c);
  std::vector<Vector> probes = grid;
  for (const Vector& b : body.sample_boundary(std::min(boundary_samples, 64), seed + 1)) probes.push_back(b + 1e-4 * (c - b));
  rep.grid_points = static_cast<int>(grid.size());

  // (i) invertible Jacobian, orientation preserved
  rep.jacobian_margin = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  bool negative = false;
  for (const Vector& x : probes) {
    const Matrix jg = candidate.displacement_jacobian(x);
    const double det = (Matrix::Identity(n, n) + jg).determinant();
    rep.jacobian_margin = std::min(rep.jacobian_margin, det);
    negative = negative || det < 0.0;
    lip = std::max(lip, operator_norm(jg));
  }
  rep.jacobian_ok = rep.jacobian_margin > 0.0;
  if (!rep.jacobian_ok) detail << "det(I + gamma') reaches " << rep.jacobian_margin << "; ";
  rep.lipschitz_estimate = kLipInflation * lip;

  // (ii) base point maps into the interior
  if (body.contains(x0)) {
    const Vector y0 = x0 + candidate.displacement(x0);
    rep.interior_point_ok = body.contains(y0) && body.distance_to_boundary(y0) > 0.0;
  }
  if (!rep.interior_point_ok) detail << "x0 + gamma(x0) is not interior; ";

  // (iii) injectivity
  std::vector<Vector> images;
  images.reserve(grid.size());
  for (const Vector& x : grid) images.push_back(x + candidate.displacement(x));
  rep.min_image_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j)
      rep.min_image_ratio = std::min(rep.min_image_ratio, (images[i] - images[j]).norm() / (grid[i] - grid[j]).norm());
  if (rep.lipschitz_estimate < 1.0) {
    rep.injectivity = ChartReport::Injectivity::LipschitzCertified;
  } else if (negative) {
    // a boundary-fixing map has degree 1, so a preimage with negative
    // Jacobian forces at least two more preimages of the same value
    rep.injectivity = ChartReport::Injectivity::Failed;
    detail << "orientation reverses somewhere, so id + gamma is not injective; ";
  } else if (rep.min_image_ratio <= 1e-9) {
    rep.injectivity = ChartReport::Injectivity::Failed;
    detail << "two grid points have (nearly) equal images; ";
  } else {
    rep.injectivity = ChartReport::Injectivity::GridHeuristic;
    detail << "Lip(gamma) >= 1: injectivity only checked on the grid; ";
  }
  rep.detail = detail.str();
  return rep;
}

Diffeo compose(const Diffeo& psi, const Diffeo& phi) {
  if (!(psi.body() == phi.body())) throw DomainError("compose: elements live on different bodies");
  if (psi.provenance() == Diffeo::Provenance::Identity) return phi;
  if (phi.provenance() == Diffeo::Provenance::Identity) return psi;
  const double lip = psi.lip_gamma() * (1.0 + phi.lip_gamma()) + phi.lip_gamma();
  return Diffeo::from_displacement(std::make_shared<ComposedDisplacement>(psi, phi), lip,
                                   Diffeo::Provenance::Composite);
}

PointInverse invert_at(const Diffeo& phi, const Vector& y, const InverseOptions& opts) {
  if (!(phi.lip_gamma() < 1.0)) {
    std::ostringstream os;
    os << "invert_at: no contraction certificate (Lip(gamma) = " << phi.lip_gamma() << " >= 1)";
    throw CertificateError(os.str());
  }
  const ConvexBody& body = phi.body();
  if (!body.contains(y)) throw DomainError("invert_at: point is not in K");
  PointInverse out{y, 0};
  if (body.distance_to_boundary(y) == 0.0) return out;
  Vector x = y;
  for (int k = 1; k <= opts.max_iter; ++k) {
    Vector next = y - phi.displacement(x);
    if (!body.contains(next)) next = pull_back_into(body, y, next);
    const double step = (next - x).norm();  // = |phi(x) - y|
    x = std::move(next);
    out.iterations = k;
    if (step <= opts.tol) {
      out.point = x;
      return out;
    }
  }
  throw ConvergenceError("invert_at: no convergence after " + std::to_string(opts.max_iter) + " iterations",
                         phi.lip_gamma());
}

Diffeo invert(const Diffeo& phi, const InverseOptions& opts) {
  if (phi.provenance() == Diffeo::Provenance::Identity) return phi;
  const double lip = phi.lip_gamma();
  if (!(lip < 1.0)) throw CertificateError("invert: no contraction certificate (Lip(gamma) >= 1)");
  return Diffeo::from_displacement(std::make_shared<InverseDisplacement>(phi, opts), lip / (1.0 - lip),
                                   Diffeo::Provenance::Inverse);
}

Vector parametric_inverse(const DiffeoFamily& family, const Vector& z, const Vector& y, const InverseOptions& opts) {
  if (!(family.lip_gamma < 1.0)) throw CertificateError("parametric_inverse: family certificate must be < 1");
  return invert_at(family.element(z), y, opts).point;
}

InverseSensitivity parametric_inverse_sensitivity(const DiffeoFamily& family, const Vector& z, const Vector& y,
                                                  double h, const InverseOptions& opts) {
  InverseSensitivity out;
  const Diffeo fz = family.element(z);
  out.value = invert_at(fz, y, opts).point;
  Eigen::FullPivLU<Matrix> lu(fz.jacobian(out.value));
  if (!lu.isInvertible()) throw CertificateError("parametric_inverse_sensitivity: singular Jacobian");
  const Vector& x = out.value;
  const Matrix dzf = fd_parameter_jacobian([&](const Vector& zz) { return family.element(zz).apply(x); }, z,
                                           h * (1.0 + z.norm()));
  out.d_y = lu.inverse();
  out.d_z = -lu.solve(dzf);
  return out;
}

double sup_distance(const Diffeo& a, const Diffeo& b, const std::vector<Vector>& points) {
  double worst = 0.0;
  for (const Vector& x : points) worst = std::max(worst, (a.apply(x) - b.apply(x)).norm());
  return worst;
}

}  // namespace diffk
