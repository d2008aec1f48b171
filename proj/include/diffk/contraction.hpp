#pragma once

#include <functional>

#include "diffk/fields.hpp"
#include "diffk/geometry.hpp"

namespace diffk {

/// Grid and stopping settings for Picard solves.
struct FlowSettings {
  int grid = 2048;
  double tol = 1e-13;
  int max_iter = 200;
};

/// Initial value problem y' = f(t, y), y(0) = x0 on [0, 1], posed on the
/// closed ball of radius `radius` around x0. Solvable by Picard iteration
/// when sup_norm <= radius and lipschitz < 1.
struct PicardProblem {
  std::function<Vector(double, const Vector&)> rhs;
  Vector x0;
  double radius = 0.0;     // R
  double lipschitz = 0.0;  // L >= sup_t Lip(f(t, .))
  double sup_norm = 0.0;   // M >= sup |f| on [0,1] x B_R(x0)
};

/// Problem for the flow of a certified curve from x0 in K: R = d(x0)/2,
/// L = theta and M = (3/2) theta d(x0), which is <= R because theta <= 1/3.
/// The curve must outlive the returned problem.
PicardProblem picard_problem(const LieAlgebraCurve& curve, const Vector& x0);

/// Trajectory on the uniform grid t_i = i/N.
struct FlowResult {
  Vector times;   // N + 1 nodes
  Matrix states;  // n x (N + 1), column i is y(t_i)
  int iterations = 0;
  double residual = 0.0;           // max_i |y_i - x0 - trapz_0^{t_i} f(s, y(s)) ds|
  double contraction_ratio = 0.0;  // largest observed ratio of successive sweep distances
  double max_excursion = 0.0;      // max_i |y_i - x0|
  bool confinement_ok = true;      // max_excursion <= R

  Vector final_state() const { return states.col(states.cols() - 1); }
};

/// Picard iteration eta -> x0 + int_0^t f(s, eta(s)) ds on the grid, starting
/// from the constant curve, with composite trapezoid quadrature. Stops once
/// the sweep distance is <= tol (1 - L), so the distance to the discrete
/// fixed point is at most tol.
///
/// Throws CertificateError if the problem violates M <= R or L < 1, or a
/// state leaves the ball by more than 1e-9; ConvergenceError after max_iter
/// sweeps.
FlowResult picard_solve(const PicardProblem& problem, int grid_size, double tol = 1e-13, int max_iter = 200);

/// Defect of a trajectory recomputed from scratch.
double picard_residual(const PicardProblem& problem, const FlowResult& result);

/// p -> f(p, .) with sup_p Lip(f(p, .)) <= theta < 1.
struct ContractionFamily {
  std::function<Vector(const Vector& p, const Vector& x)> map;
  double theta = 0.0;
};

struct FixedPoint {
  Vector point;
  int iterations = 0;
  double last_step = 0.0;
};

/// Banach iteration x <- f(p, x) until |f(p, x) - x| <= tol (1 - theta).
/// Throws CertificateError when the step grows over 5 consecutive
/// iterations, ConvergenceError after max_iter.
FixedPoint fixed_point(const ContractionFamily& family, const Vector& p, const Vector& x_init,
                       double tol = 1e-12, int max_iter = 10000);

/// D phi(p) = (I - D_x f(p, x_p))^{-1} D_p f(p, x_p), both partials by
/// central differences with steps h (1 + |x_p|) and h (1 + |p|).
Matrix fixed_point_sensitivity(const ContractionFamily& family, const Vector& p, const Vector& x_p,
                               double h = 1e-5);

/// Directional derivative along y of p -> A(p)^{-1} z, namely
/// -A(p)^{-1} (D_p A . y) A(p)^{-1} z with D_p A . y by central differences.
Vector linear_family_inverse_derivative(const std::function<Matrix(const Vector&)>& family, const Vector& p,
                                        const Vector& z, const Vector& direction, double h = 1e-5);

}  // namespace diffk
