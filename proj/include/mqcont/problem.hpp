#pragma once

#include <functional>

#include "mqcont/linalg.hpp"
#include "mqcont/point.hpp"

namespace mqcont {

/// Reaction term f in the system  sum_axis D[m][axis] d2u_m/dx_axis^2 = f_m.
/// `grad` is n x dim (one row of first derivatives per component), `u` the
/// component values at the evaluation point.  The derivative callbacks are
/// optional; when absent the discretized system falls back to one-sided
/// finite differences.
struct Reaction {
  std::function<Vector(const Matrix& grad, const Vector& u, const Point& p, double alpha)>
      value;
  /// n x n, entry (m,q) = df_m/du_q
  std::function<Matrix(const Matrix&, const Vector&, const Point&, double)> du;
  /// n x (n*dim), column q*dim + axis = df/d(du_q/dx_axis)
  std::function<Matrix(const Matrix&, const Vector&, const Point&, double)> dgrad;
  /// n entries df_m/dalpha
  std::function<Vector(const Matrix&, const Vector&, const Point&, double)> dalpha;
};

/// Boundary operator f_b(du/dn, u, x, alpha) = 0 collocated at boundary nodes.
/// Linear conditions additionally expose the componentwise coefficient form
///   beta1_m * du_m/dn + beta0_m * u_m + gamma_m = 0,
/// which lets the boundary block be eliminated with one LU solve.
struct BoundaryCondition {
  bool linear = true;
  std::function<Vector(const Vector& dudn, const Vector& u, const Point& p, double alpha)>
      value;
  std::function<Vector(const Point&, double)> beta1;
  std::function<Vector(const Point&, double)> beta0;
  std::function<Vector(const Point&, double)> gamma;
  /// optional d(gamma)/dalpha; finite differences otherwise
  std::function<Vector(const Point&, double)> gamma_dalpha;
};

/// A parametrized elliptic system on the unit interval/square.
///
/// `diffusion` returns an n x dim matrix of per-axis diffusivities, so
/// operators like d*(u_xx/l^2 + u_yy) from domain rescaling are expressible;
/// for the isotropic case all columns are equal.
struct ProblemDefinition {
  int n = 1;
  int dim = 1;
  std::function<Matrix(double alpha)> diffusion;
  std::function<Matrix(double alpha)> diffusion_dalpha;  ///< optional
  Reaction reaction;
  BoundaryCondition bc;
};

} // namespace mqcont
