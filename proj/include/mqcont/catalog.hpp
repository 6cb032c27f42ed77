#pragma once

#include <map>
#include <string>
#include <vector>

#include "mqcont/continuation_problem.hpp"
#include "mqcont/nodes.hpp"
#include "mqcont/problem.hpp"

namespace mqcont {

/// A ready-to-discretize benchmark problem: the definition, its resolved
/// parameter values, and the exact starting state for continuation runs.
struct CatalogEntry {
  std::string id;
  std::string alpha_name;     ///< continuation parameter symbol ("lambda", "b", "l")
  ProblemDefinition problem;
  std::map<std::string, double> params;

  /// Interior nodal values of the known starting solution at parameter alpha.
  Vector initial_state(double alpha, const NodeSet& nodes) const;
};

std::vector<std::string> catalog_ids();

/// Builds one of: laplace_eigen_1d, bratu_1d, brusselator_1d, pattern_1d,
/// bratu_2d, brusselator_2d.  `overrides` replaces default parameter values;
/// unknown ids or parameter names throw std::invalid_argument.
CatalogEntry make_catalog_entry(const std::string& id,
                                const std::map<std::string, double>& overrides = {});

// --- closed-form references -------------------------------------------------

/// Dirichlet eigenvalues (pi m)^2 of -u'' on the unit interval.
double oracle_laplace_eigenvalue(int m);
double oracle_laplace_eigenfunction(int m, double x);

/// Closed-form eigenvalues 4 N^2 sin^2(pi m / 2N), m = 1..N-1, of the
/// standard second-difference matrix on a mesh with N intervals.
std::vector<double> fd_laplace_eigenvalues(int mesh_n);

/// That matrix itself: tridiag(-1, 2, -1)/h^2 of order N-1.
Matrix fd_laplace_matrix(int mesh_n);

/// Turning point of the 1D Gelfand problem u'' + lambda e^u = 0, u(0)=u(1)=0,
/// computed from the closed-form solution family: the critical theta solves
/// theta tanh(theta/4) = 4 and lambda* = theta^2 / (2 cosh^2(theta/4)).
double oracle_bratu_fold_1d();

/// Published reference for the turning point of the 2D problem on the unit
/// square (no closed form is known).
double reference_bratu_fold_2d();

/// Steady bifurcation values of the Brusselator from the linearization about
/// the trivial state (u, v) = (a, b/a); mode index n in 1D, (m, n) in 2D
/// (x mode m is the one scaled by the aspect parameter l).
double oracle_brusselator_1d_branch(const CatalogEntry& e, int n_mode);
double oracle_brusselator_2d_stationary(const CatalogEntry& e, int m_mode, int n_mode);
double oracle_brusselator_2d_hopf(const CatalogEntry& e, int m_mode, int n_mode);

/// All bifurcation values of the pattern-formation system in [l_lo, l_hi],
/// from the per-mode quadratic delta mu^2 - (delta a11 + a22) mu + det J = 0
/// of the linearization about the homogeneous state; sorted ascending.
std::vector<double> oracle_pattern_bifurcations(const CatalogEntry& e, double l_lo,
                                                double l_hi);

// --- finite-difference cross check ------------------------------------------

/// Standard central-difference discretization of a catalog entry on a uniform
/// mesh with mesh_n intervals per direction.  Dirichlet conditions only.
class FdSystem : public ContinuationProblem {
 public:
  FdSystem(CatalogEntry entry, int mesh_n);

  int order() const override { return n_ * count_; }
  Vector residual(const Vector& u, double alpha) const override;
  Matrix jacobian_u(const Vector& u, double alpha) const override;
  Vector jacobian_alpha(const Vector& u, double alpha) const override;

  int mesh_n() const { return mesh_; }
  Point grid_point(int i) const;                 ///< i-th interior mesh point
  Vector initial_state(double alpha) const;

 private:
  CatalogEntry entry_;
  int mesh_, n_, dim_, per_axis_, count_;
  double h_;
  double dirichlet_value(int m, const Point& p, double alpha) const;
};

FdSystem fd_discretize(const CatalogEntry& entry, int mesh_n);

} // namespace mqcont
