#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mqcont/continuation_problem.hpp"
#include "mqcont/linalg.hpp"
#include "mqcont/nodes.hpp"
#include "mqcont/problem.hpp"

namespace mqcont {

/// Coefficients of the collocation expansion for all n components:
///   u_m(x) = a0[m] + sum_j a1(m,j) (g_j - g_ref)(x) + sum_q a2(m,q) (g_q^b - g_ref)(x)
/// where g_ref is the multiquadric centered at the last interior node.  The
/// reference subtraction pins the coefficient sum of the plain multiquadric
/// part to zero, which keeps the square collocation system well determined
/// alongside the constant term.
struct Expansion {
  Vector a0;  ///< n
  Matrix a1;  ///< n x (N-1), interior difference coefficients
  Matrix a2;  ///< n x Nb, boundary difference coefficients
};

/// Interior nodal values of all components (component-blocked, size n*N) at a
/// parameter value.
struct NodalState {
  Vector u;
  double alpha = 0.0;
};

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when the coefficient-to-nodal-value map cannot be inverted; carries
/// the measured condition number.
struct GammaError : std::runtime_error {
  double cond;
  GammaError(const std::string& msg, double cond_est)
      : std::runtime_error(msg), cond(cond_est) {}
};

/// The collocated system G(U, alpha) = 0 over interior nodal values.
///
/// Boundary coefficients are eliminated through the boundary collocation
/// equations (linear conditions reduce to a2 = B a + b(alpha)), and the
/// square map Gamma sends the N remaining coefficients (a0 plus the N-1
/// interior differences) to the N interior nodal values.  Residuals and
/// Jacobians are expressed through cached nodal operators
///   L_ax = (Lax_int + Lax_b B) Gamma^-1,   G_ax = (Dax_int + Dax_b B) Gamma^-1,
/// so only the affine boundary offset has to be refreshed when alpha moves.
class DiscretizedSystem : public ContinuationProblem {
 public:
  ProblemDefinition problem;
  NodeSet nodes;
  ShapeParameters shapes;
  int n = 1, dim = 1, N = 0, Nb = 0;

  // Basis matrices; the leading column of the *_int blocks is the constant
  // term of the expansion.
  Matrix V_int, V_b;                  // values at interior nodes
  std::vector<Matrix> D_int, D_b;     // first derivative per axis, interior rows
  std::vector<Matrix> L_int, L_b;     // second derivative per axis, interior rows
  Matrix W_int, W_b;                  // values at boundary nodes
  Matrix Nd_int, Nd_b;                // normal derivatives at boundary nodes

  struct ComponentCache {
    linalg::LuFactorization mb_lu;      // boundary block, beta1*Nd + beta0*W
    Matrix mb;                          // the matrix itself (kept for checks)
    Matrix B;                           // Nb x N elimination matrix
    Matrix gamma;                       // N x N coefficient -> nodal value map
    linalg::LuFactorization gamma_lu;
    linalg::LuFactorization gamma_t_lu; // transpose factor, for M * Gamma^-1
    double gamma_cond = 0.0;
    std::vector<Matrix> lap_nodal;      // N x N per axis
    std::vector<Matrix> grad_nodal;     // N x N per axis
    std::vector<Matrix> lap_off;        // N x Nb per axis
    std::vector<Matrix> grad_off;       // N x Nb per axis
    // Boundary data composed directly with the eliminated operators,
    // lap_bvals = -lap_off * mb^-1, applied to the boundary values gamma(alpha).
    // Evaluating through these avoids the large intermediate coefficient
    // vector whose double rounding would otherwise dominate the residual.
    std::vector<Matrix> lap_bvals;      // N x Nb per axis
    std::vector<Matrix> grad_bvals;     // N x Nb per axis
  };
  std::vector<ComponentCache> comp;   // one per component (linear BCs only)
  bool ill_conditioned = false;       // any gamma_cond beyond 1/(100 eps)
  double max_gamma_cond = 0.0;

  // --- ContinuationProblem ---
  int order() const override { return n * N; }
  Vector residual(const Vector& u, double alpha) const override;
  Matrix jacobian_u(const Vector& u, double alpha) const override;
  Vector jacobian_alpha(const Vector& u, double alpha) const override;

  /// Same residual recomputed from scratch: fresh factorizations, raw basis
  /// sums, no cached nodal operators.  Kept as an independent evaluation
  /// route for verification.
  Vector residual_direct(const Vector& u, double alpha) const;

  /// Finite-difference Jacobians regardless of any analytic callbacks.
  Matrix jacobian_u_fd(const Vector& u, double alpha) const;
  Vector jacobian_alpha_fd(const Vector& u, double alpha) const;

  // --- coefficient maps (matrices are n x N / n x Nb, one row per component) ---
  Matrix gamma_map(const Matrix& a, double alpha) const;
  Matrix gamma_inverse(const Matrix& u_nodal, double alpha) const;
  Matrix solve_boundary_coeffs(const Matrix& a, double alpha) const;

  Expansion expansion_from_nodal(const NodalState& state) const;
  Vector eval_uh(const Expansion& e, const Point& p) const;
  Matrix eval_grad_uh(const Expansion& e, const Point& p) const;   // n x dim
  Vector eval_lap_uh(const Expansion& e, const Point& p) const;    // plain Laplacian per component

  /// -d(residual)/dU for a linear homogeneous problem, i.e. the matrix A with
  /// residual(U) = -A U; for the pure Laplacian its eigenvalues approximate
  /// the Dirichlet spectrum.  Rejects problems that are detectably nonlinear
  /// or inhomogeneous.
  Matrix build_nodal_operator(double alpha = 0.0) const;

  /// Affine boundary offset b_m(alpha) of component m and its alpha
  /// derivative (linear boundary conditions only).
  Vector boundary_offset(int m, double alpha) const;
  Vector boundary_offset_dalpha(int m, double alpha) const;

 private:
  Vector boundary_gamma_vec(int m, double alpha) const;
  Vector boundary_gamma_dalpha_vec(int m, double alpha) const;
  Matrix nonlinear_boundary_solve(const Matrix& a, double alpha, const Matrix* guess) const;
  friend DiscretizedSystem build_system(const ProblemDefinition&, const NodeSet&,
                                        const ShapeParameters&);
};

/// Assembles all basis matrices, eliminates the boundary blocks and
/// factorizes the Gamma maps.  Throws AssemblyError for inconsistent input or
/// a singular boundary block and GammaError when Gamma is singular; a merely
/// ill-conditioned Gamma sets the warning flag instead.
DiscretizedSystem build_system(const ProblemDefinition& problem, const NodeSet& nodes,
                               const ShapeParameters& shapes);

} // namespace mqcont
