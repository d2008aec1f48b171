#pragma once

#include <algorithm>
#include <cmath>

#include "diffk/errors.hpp"
#include "diffk/geometry.hpp"

namespace diffk {

/// Step used for spatial finite differences at x: max(1e-6, 1e-3 d(x)),
/// capped at half the boundary distance when x is interior.
inline double spatial_fd_step(double boundary_distance) {
  double h = std::max(1e-6, 1e-3 * boundary_distance);
  if (boundary_distance > 0.0) h = std::min(h, 0.5 * boundary_distance);
  return h;
}

/// Spatial Jacobian of a map K -> R^m by central differences. Where a
/// central stencil leaves K (points on or very near the boundary) a
/// second-order one-sided stencil into K is used instead.
template <class Map>
Matrix fd_jacobian(const Map& map, const ConvexBody& body, const Vector& x) {
  const double h = spatial_fd_step(body.distance_to_boundary(x));
  const Vector f0 = map(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    const bool up = body.contains(xp);
    const bool down = body.contains(xm);
    if (up && down) {
      jac.col(j) = (map(xp) - map(xm)) / (2.0 * h);
    } else {
      const double s = up ? h : -h;
      Vector x1 = x, x2 = x;
      x1(j) = x(j) + s;
      x2(j) = x(j) + 2.0 * s;
      if (!(up || down) || !body.contains(x2))
        throw StencilError("fd_jacobian: no stencil along coordinate " + std::to_string(j + 1) +
                           " fits inside K");
      jac.col(j) = (-3.0 * f0 + 4.0 * map(x1) - map(x2)) / (2.0 * s);
    }
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return jac;
}

/// Central-difference derivative of a vector-valued function of a parameter
/// vector: column k is (g(p + h e_k) - g(p - h e_k)) / 2h.
template <class Fn>
Matrix fd_parameter_jacobian(const Fn& g, const Vector& p, double h) {
  Vector pp = p, pm = p;
  Matrix jac;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    pp(k) = p(k) + h;
    pm(k) = p(k) - h;
    Vector col = (g(pp) - g(pm)) / (2.0 * h);
    if (k == 0) jac.resize(col.size(), p.size());
    jac.col(k) = col;
    pp(k) = p(k);
    pm(k) = p(k);
  }
  return jac;
}

/// Spectral norm (largest singular value).
inline double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace diffk
