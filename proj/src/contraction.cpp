#include "diffk/contraction.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "diffk/errors.hpp"
#include "diffk/numdiff.hpp"

namespace diffk {

namespace {

constexpr double kConfinementSlack = 1e-9;

// out.col(i) = x0 + trapz_0^{t_i} F
void integrate(const Vector& x0, const Matrix& F, double h, Matrix& out) {
  out.col(0) = x0;
  Vector acc = Vector::Zero(x0.size());
  for (Eigen::Index i = 1; i < F.cols(); ++i) {
    acc += 0.5 * h * (F.col(i - 1) + F.col(i));
    out.col(i) = x0 + acc;
  }
}

void sample_rhs(const PicardProblem& pb, const Vector& times, const Matrix& states, Matrix& F) {
  for (Eigen::Index i = 0; i < states.cols(); ++i) F.col(i) = pb.rhs(times(i), states.col(i));
}

}  // namespace

PicardProblem picard_problem(const LieAlgebraCurve& curve, const Vector& x0) {
  const double d = curve.field().body().distance_to_boundary(x0);
  PicardProblem pb;
  const BoundaryVanishingField* field = &curve.field();
  pb.rhs = [field](double t, const Vector& y) { return field->eval(t, y); };
  pb.x0 = x0;
  pb.radius = 0.5 * d;
  pb.lipschitz = curve.theta();
  pb.sup_norm = 1.5 * curve.theta() * d;
  return pb;
}

FlowResult picard_solve(const PicardProblem& pb, int grid_size, double tol, int max_iter) {
  if (grid_size < 8) throw DomainError("picard_solve: grid size must be >= 8");
  if (!(tol > 0.0)) throw DomainError("picard_solve: tol must be positive");
  if (!(pb.lipschitz < 1.0)) {
    std::ostringstream os;
    os << "picard_solve: Lipschitz certificate L=" << pb.lipschitz << " is not < 1";
    throw CertificateError(os.str());
  }
  if (!(pb.sup_norm <= pb.radius)) {
    std::ostringstream os;
    os << "picard_solve: sup-norm certificate M=" << pb.sup_norm << " exceeds radius R=" << pb.radius;
    throw CertificateError(os.str());
  }
  const Eigen::Index n = pb.x0.size();
  const Eigen::Index nodes = grid_size + 1;
  const double h = 1.0 / grid_size;

  FlowResult res;
  res.times.resize(nodes);
  for (Eigen::Index i = 0; i < nodes; ++i) res.times(i) = i == grid_size ? 1.0 : static_cast<double>(i) * h;
  res.states = pb.x0.replicate(1, nodes);
  Matrix F(n, nodes), next(n, nodes);

  const double noise_floor = 100.0 * std::numeric_limits<double>::epsilon() * (1.0 + pb.x0.norm());
  double prev = -1.0;
  for (int k = 1;; ++k) {
    sample_rhs(pb, res.times, res.states, F);
    integrate(pb.x0, F, h, next);
    double dist = 0.0;
    double excursion = 0.0;
    for (Eigen::Index i = 0; i < nodes; ++i) {
      dist = std::max(dist, (next.col(i) - res.states.col(i)).norm());
      excursion = std::max(excursion, (next.col(i) - pb.x0).norm());
    }
    res.states.swap(next);
    res.iterations = k;
    if (excursion > pb.radius + kConfinementSlack) {
      std::ostringstream os;
      os << "picard_solve: trajectory left the ball B_R(x0), excursion " << excursion << " > R=" << pb.radius;
      throw CertificateError(os.str());
    }
    if (prev > noise_floor) res.contraction_ratio = std::max(res.contraction_ratio, dist / prev);
    prev = dist;
    if (dist <= tol * (1.0 - pb.lipschitz)) break;
    if (k >= max_iter) {
      throw ConvergenceError("picard_solve: no convergence after " + std::to_string(max_iter) + " sweeps",
                             res.contraction_ratio);
    }
  }
  for (Eigen::Index i = 0; i < nodes; ++i)
    res.max_excursion = std::max(res.max_excursion, (res.states.col(i) - pb.x0).norm());
  res.confinement_ok = res.max_excursion <= pb.radius;
  res.residual = picard_residual(pb, res);
  return res;
}

double picard_residual(const PicardProblem& pb, const FlowResult& result) {
  const Eigen::Index nodes = result.states.cols();
  const double h = 1.0 / static_cast<double>(nodes - 1);
  Matrix F(pb.x0.size(), nodes), image(pb.x0.size(), nodes);
  sample_rhs(pb, result.times, result.states, F);
  integrate(pb.x0, F, h, image);
  double r = 0.0;
  for (Eigen::Index i = 0; i < nodes; ++i) r = std::max(r, (result.states.col(i) - image.col(i)).norm());
  return r;
}

FixedPoint fixed_point(const ContractionFamily& family, const Vector& p, const Vector& x_init, double tol,
                       int max_iter) {
  if (!(family.theta < 1.0) || family.theta < 0.0)
    throw CertificateError("fixed_point: contraction certificate must satisfy 0 <= theta < 1");
  FixedPoint fp;
  fp.point = x_init;
  double prev = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int k = 1; k <= max_iter; ++k) {
    Vector next = family.map(p, fp.point);
    const double step = (next - fp.point).norm();
    fp.point = std::move(next);
    fp.iterations = k;
    fp.last_step = step;
    if (step <= tol * (1.0 - family.theta)) return fp;
    growth = step > prev ? growth + 1 : 0;
    if (growth >= 5) {
      throw CertificateError("fixed_point: iteration expanded over 5 consecutive steps; "
                             "the contraction certificate is invalid");
    }
    prev = step;
  }
  throw ConvergenceError("fixed_point: no convergence after " + std::to_string(max_iter) + " iterations",
                         fp.last_step);
}

Matrix fixed_point_sensitivity(const ContractionFamily& family, const Vector& p, const Vector& x_p, double h) {
  const double hx = h * (1.0 + x_p.norm());
  const double hp = h * (1.0 + p.norm());
  const Matrix dx = fd_parameter_jacobian([&](const Vector& x) { return family.map(p, x); }, x_p, hx);
  const Matrix dp = fd_parameter_jacobian([&](const Vector& q) { return family.map(q, x_p); }, p, hp);
  const Matrix lhs = Matrix::Identity(x_p.size(), x_p.size()) - dx;
  Eigen::FullPivLU<Matrix> lu(lhs);
  if (!lu.isInvertible())
    throw CertificateError("fixed_point_sensitivity: I - D_x f is singular; the contraction certificate is broken");
  return lu.solve(dp);
}

Vector linear_family_inverse_derivative(const std::function<Matrix(const Vector&)>& family, const Vector& p,
                                        const Vector& z, const Vector& direction, double h) {
  const Matrix a = family(p);
  if (a.rows() != a.cols() || a.rows() != z.size()) throw DimensionError("linear_family_inverse_derivative: shape mismatch");
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw DomainError("linear_family_inverse_derivative: A(p) is singular");
  const double step = h * (1.0 + p.norm());
  const Matrix da = (family(p + step * direction) - family(p - step * direction)) / (2.0 * step);
  return -lu.solve(da * lu.solve(z));
}

}  // namespace diffk
