#include "mqcont/system.hpp"

#include <cmath>
#include <limits>

#include "mqcont/basis.hpp"

namespace mqcont {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double fd_step(double ref) { return std::sqrt(kEps) * (1.0 + std::abs(ref)); }

// One pass of iterative refinement.  The boundary blocks can be ill
// conditioned enough that a plain LU solve leaves the computed solution rough
// under ulp-level changes of alpha, which starves the continuation corrector
// of smoothness near its tolerance; a single refinement pass restores
// eps-level accuracy at negligible cost.
Vector refined_solve(const linalg::LuFactorization& lu, const Matrix& A, const Vector& b) {
  Vector x = lu.solve(b);
  x += lu.solve(Vector(b - A * x));
  return x;
}

Matrix refined_solve(const linalg::LuFactorization& lu, const Matrix& A, const Matrix& B) {
  Matrix x = lu.solve(B);
  x += lu.solve(Matrix(B - A * x));
  return x;
}

} // namespace

// ---------------------------------------------------------------------------
// assembly
// ---------------------------------------------------------------------------

DiscretizedSystem build_system(const ProblemDefinition& problem, const NodeSet& nodes,
                               const ShapeParameters& shapes) {
  if (problem.dim != nodes.dim)
    throw AssemblyError("build_system: problem and node set disagree on dimension");
  if (problem.n < 1) throw AssemblyError("build_system: need at least one component");
  if (!problem.diffusion || !problem.reaction.value || !problem.bc.value)
    throw AssemblyError("build_system: diffusion, reaction and boundary callbacks required");
  if (problem.bc.linear && (!problem.bc.beta1 || !problem.bc.beta0 || !problem.bc.gamma))
    throw AssemblyError("build_system: linear boundary condition must provide its coefficient form");

  DiscretizedSystem sys;
  sys.problem = problem;
  sys.nodes = nodes;
  sys.shapes = shapes;
  sys.n = problem.n;
  sys.dim = problem.dim;
  sys.N = nodes.interior_count();
  sys.Nb = nodes.boundary_count();

  const int N = sys.N, Nb = sys.Nb, dim = sys.dim;
  if (static_cast<int>(shapes.c.size()) != N + Nb)
    throw AssemblyError("build_system: one shape parameter per node required");
  for (double c : shapes.c)
    if (!(c > 0.0)) throw AssemblyError("build_system: shape parameters must be positive");

  const Point ref = nodes.interior[N - 1];
  const double cref = shapes.c[N - 1];

  sys.V_int = Matrix::Zero(N, N);
  sys.V_b = Matrix::Zero(N, Nb);
  sys.W_int = Matrix::Zero(Nb, N);
  sys.W_b = Matrix::Zero(Nb, Nb);
  sys.Nd_int = Matrix::Zero(Nb, N);
  sys.Nd_b = Matrix::Zero(Nb, Nb);
  sys.D_int.assign(dim, Matrix::Zero(N, N));
  sys.D_b.assign(dim, Matrix::Zero(N, Nb));
  sys.L_int.assign(dim, Matrix::Zero(N, N));
  sys.L_b.assign(dim, Matrix::Zero(N, Nb));

  auto grad_axis = [](const Point& g, int ax) { return ax == 0 ? g.x : g.y; };

  // interior evaluation rows
  for (int i = 0; i < N; ++i) {
    const Point& p = nodes.interior[i];
    sys.V_int(i, 0) = 1.0;
    const double vref = mq_value(ref, cref, p);
    const Point gref = mq_gradient(ref, cref, p);
    for (int j = 0; j + 1 < N; ++j) {
      const Point& cj = nodes.interior[j];
      const double c = shapes.c[j];
      sys.V_int(i, j + 1) = mq_value(cj, c, p) - vref;
      const Point g = mq_gradient(cj, c, p);
      for (int ax = 0; ax < dim; ++ax) {
        sys.D_int[ax](i, j + 1) = grad_axis(g, ax) - grad_axis(gref, ax);
        sys.L_int[ax](i, j + 1) =
            mq_second_derivative(cj, c, p, ax) - mq_second_derivative(ref, cref, p, ax);
      }
    }
    for (int q = 0; q < Nb; ++q) {
      const Point& cq = nodes.boundary[q];
      const double c = shapes.c[N + q];
      sys.V_b(i, q) = mq_value(cq, c, p) - vref;
      const Point g = mq_gradient(cq, c, p);
      for (int ax = 0; ax < dim; ++ax) {
        sys.D_b[ax](i, q) = grad_axis(g, ax) - grad_axis(gref, ax);
        sys.L_b[ax](i, q) =
            mq_second_derivative(cq, c, p, ax) - mq_second_derivative(ref, cref, p, ax);
      }
    }
  }

  // boundary evaluation rows
  for (int q = 0; q < Nb; ++q) {
    const Point& p = nodes.boundary[q];
    const Point& nrm = nodes.normals[q];
    sys.W_int(q, 0) = 1.0;
    const double vref = mq_value(ref, cref, p);
    const double ndref = mq_normal_derivative(ref, cref, p, nrm);
    for (int j = 0; j + 1 < N; ++j) {
      const Point& cj = nodes.interior[j];
      const double c = shapes.c[j];
      sys.W_int(q, j + 1) = mq_value(cj, c, p) - vref;
      sys.Nd_int(q, j + 1) = mq_normal_derivative(cj, c, p, nrm) - ndref;
    }
    for (int q2 = 0; q2 < Nb; ++q2) {
      const Point& cq = nodes.boundary[q2];
      const double c = shapes.c[N + q2];
      sys.W_b(q, q2) = mq_value(cq, c, p) - vref;
      sys.Nd_b(q, q2) = mq_normal_derivative(cq, c, p, nrm) - ndref;
    }
  }

  if (!problem.bc.linear) return sys;  // elimination caches only exist for linear BCs

  const double cond_warn = 1.0 / (100.0 * kEps);
  sys.comp.resize(sys.n);
  for (int m = 0; m < sys.n; ++m) {
    auto& cc = sys.comp[m];
    Matrix mb = Matrix::Zero(Nb, Nb);
    Matrix m1 = Matrix::Zero(Nb, N);
    for (int q = 0; q < Nb; ++q) {
      const Point& p = nodes.boundary[q];
      const double b1 = problem.bc.beta1(p, 0.0)[m];
      const double b0 = problem.bc.beta0(p, 0.0)[m];
      mb.row(q) = b1 * sys.Nd_b.row(q) + b0 * sys.W_b.row(q);
      m1.row(q) = b1 * sys.Nd_int.row(q) + b0 * sys.W_int.row(q);
    }
    cc.mb = mb;
    cc.mb_lu = linalg::lu_factor(mb);
    if (cc.mb_lu.singular)
      throw AssemblyError("boundary elimination failed: singular boundary block");
    cc.B = -refined_solve(cc.mb_lu, mb, m1);

    cc.gamma = sys.V_int + sys.V_b * cc.B;
    cc.gamma_lu = linalg::lu_factor(cc.gamma);
    cc.gamma_cond = linalg::cond_svd(cc.gamma).ratio;
    if (cc.gamma_lu.singular)
      throw GammaError("gamma inversion failed: singular coefficient map", cc.gamma_cond);
    cc.gamma_t_lu = linalg::lu_factor(cc.gamma.transpose());
    sys.max_gamma_cond = std::max(sys.max_gamma_cond, cc.gamma_cond);
    if (cc.gamma_cond > cond_warn) sys.ill_conditioned = true;

    cc.lap_nodal.resize(dim);
    cc.grad_nodal.resize(dim);
    cc.lap_off.resize(dim);
    cc.grad_off.resize(dim);
    cc.lap_bvals.resize(dim);
    cc.grad_bvals.resize(dim);
    const auto mb_t_lu = linalg::lu_factor(Matrix(mb.transpose()));
    for (int ax = 0; ax < dim; ++ax) {
      const Matrix lap_rows = sys.L_int[ax] + sys.L_b[ax] * cc.B;
      const Matrix grad_rows = sys.D_int[ax] + sys.D_b[ax] * cc.B;
      cc.lap_nodal[ax] = cc.gamma_t_lu.solve(Matrix(lap_rows.transpose())).transpose();
      cc.grad_nodal[ax] = cc.gamma_t_lu.solve(Matrix(grad_rows.transpose())).transpose();
      cc.lap_off[ax] = sys.L_b[ax] - cc.lap_nodal[ax] * sys.V_b;
      cc.grad_off[ax] = sys.D_b[ax] - cc.grad_nodal[ax] * sys.V_b;
      cc.lap_bvals[ax] =
          -refined_solve(mb_t_lu, Matrix(mb.transpose()), Matrix(cc.lap_off[ax].transpose()))
               .transpose();
      cc.grad_bvals[ax] =
          -refined_solve(mb_t_lu, Matrix(mb.transpose()), Matrix(cc.grad_off[ax].transpose()))
               .transpose();
    }
  }
  return sys;
}

// ---------------------------------------------------------------------------
// boundary offsets (linear conditions)
// ---------------------------------------------------------------------------

Vector DiscretizedSystem::boundary_gamma_vec(int m, double alpha) const {
  Vector g(Nb);
  for (int q = 0; q < Nb; ++q) g[q] = problem.bc.gamma(nodes.boundary[q], alpha)[m];
  return g;
}

Vector DiscretizedSystem::boundary_offset(int m, double alpha) const {
  if (!problem.bc.linear)
    throw AssemblyError("boundary_offset: only defined for linear boundary conditions");
  return -refined_solve(comp[m].mb_lu, comp[m].mb, boundary_gamma_vec(m, alpha));
}

Vector DiscretizedSystem::boundary_gamma_dalpha_vec(int m, double alpha) const {
  Vector dg(Nb);
  if (problem.bc.gamma_dalpha) {
    for (int q = 0; q < Nb; ++q) dg[q] = problem.bc.gamma_dalpha(nodes.boundary[q], alpha)[m];
  } else {
    const double d = fd_step(alpha);
    dg = (boundary_gamma_vec(m, alpha + d) - boundary_gamma_vec(m, alpha - d)) / (2.0 * d);
  }
  return dg;
}

Vector DiscretizedSystem::boundary_offset_dalpha(int m, double alpha) const {
  if (!problem.bc.linear)
    throw AssemblyError("boundary_offset_dalpha: only defined for linear boundary conditions");
  return -refined_solve(comp[m].mb_lu, comp[m].mb, boundary_gamma_dalpha_vec(m, alpha));
}

// ---------------------------------------------------------------------------
// coefficient maps
// ---------------------------------------------------------------------------

Matrix DiscretizedSystem::solve_boundary_coeffs(const Matrix& a, double alpha) const {
  if (a.rows() != n || a.cols() != N)
    throw std::invalid_argument("solve_boundary_coeffs: coefficient block must be n x N");
  if (!problem.bc.linear) return nonlinear_boundary_solve(a, alpha, nullptr);
  Matrix a2(n, Nb);
  for (int m = 0; m < n; ++m)
    a2.row(m) =
        (comp[m].B * a.row(m).transpose() + boundary_offset(m, alpha)).transpose();
  return a2;
}

Matrix DiscretizedSystem::gamma_map(const Matrix& a, double alpha) const {
  if (a.rows() != n || a.cols() != N)
    throw std::invalid_argument("gamma_map: coefficient block must be n x N");
  Matrix u(n, N);
  if (problem.bc.linear) {
    for (int m = 0; m < n; ++m)
      u.row(m) = (comp[m].gamma * a.row(m).transpose() +
                  V_b * boundary_offset(m, alpha))
                     .transpose();
    return u;
  }
  const Matrix a2 = solve_boundary_coeffs(a, alpha);
  for (int m = 0; m < n; ++m)
    u.row(m) =
        (V_int * a.row(m).transpose() + V_b * a2.row(m).transpose()).transpose();
  return u;
}

Matrix DiscretizedSystem::gamma_inverse(const Matrix& u_nodal, double alpha) const {
  if (u_nodal.rows() != n || u_nodal.cols() != N)
    throw std::invalid_argument("gamma_inverse: nodal block must be n x N");
  Matrix a(n, N);
  if (problem.bc.linear) {
    for (int m = 0; m < n; ++m) {
      const Vector rhs =
          u_nodal.row(m).transpose() - V_b * boundary_offset(m, alpha);
      a.row(m) = comp[m].gamma_lu.solve(rhs).transpose();
    }
    return a;
  }
  // Nonlinear boundary conditions: Newton on the composed map with
  // finite-difference columns.  Exercised by synthetic tests only.
  a.setZero();
  for (int it = 0; it < 40; ++it) {
    const Matrix res = gamma_map(a, alpha) - u_nodal;
    if (res.cwiseAbs().maxCoeff() < 1e-11 * (1.0 + u_nodal.cwiseAbs().maxCoeff())) return a;
    Matrix jac(n * N, n * N);
    for (int p = 0; p < n; ++p)
      for (int k = 0; k < N; ++k) {
        Matrix ap = a;
        const double d = fd_step(a(p, k));
        ap(p, k) += d;
        const Matrix rp = gamma_map(ap, alpha) - u_nodal;
        const Matrix col = (rp - res) / d;
        for (int m = 0; m < n; ++m)
          jac.block(m * N, p * N + k, N, 1) = col.row(m).transpose();
      }
    Vector rhs(n * N);
    for (int m = 0; m < n; ++m) rhs.segment(m * N, N) = res.row(m).transpose();
    const Vector step = linalg::lu_factor(jac).solve(rhs);
    for (int m = 0; m < n; ++m) a.row(m) -= step.segment(m * N, N).transpose();
  }
  throw GammaError("gamma inversion failed: Newton on composed map stalled", 0.0);
}

Matrix DiscretizedSystem::nonlinear_boundary_solve(const Matrix& a, double alpha,
                                                   const Matrix* guess) const {
  Matrix a2 = guess ? *guess : Matrix::Zero(n, Nb);

  double scale = 0.0;
  const Vector zero_n = Vector::Zero(n);
  for (int q = 0; q < Nb; ++q)
    scale = std::max(scale, problem.bc.value(zero_n, zero_n, nodes.boundary[q], alpha)
                                .cwiseAbs()
                                .maxCoeff());
  const double tol = 1e-10 * (1.0 + scale);

  auto boundary_residual = [&](const Matrix& a2try) {
    Vector r(n * Nb);
    for (int q = 0; q < Nb; ++q) {
      Vector uval(n), dnval(n);
      for (int m = 0; m < n; ++m) {
        uval[m] = W_int.row(q).dot(a.row(m)) + W_b.row(q).dot(a2try.row(m));
        dnval[m] = Nd_int.row(q).dot(a.row(m)) + Nd_b.row(q).dot(a2try.row(m));
      }
      const Vector fb = problem.bc.value(dnval, uval, nodes.boundary[q], alpha);
      for (int m = 0; m < n; ++m) r[m * Nb + q] = fb[m];
    }
    return r;
  };

  Vector r = boundary_residual(a2);
  for (int it = 0; it < 30; ++it) {
    if (r.cwiseAbs().maxCoeff() <= tol) return a2;

    // FD partials of f_b in its (du/dn, u) arguments, chained through the
    // boundary basis rows.
    Matrix jac = Matrix::Zero(n * Nb, n * Nb);
    for (int q = 0; q < Nb; ++q) {
      Vector uval(n), dnval(n);
      for (int m = 0; m < n; ++m) {
        uval[m] = W_int.row(q).dot(a.row(m)) + W_b.row(q).dot(a2.row(m));
        dnval[m] = Nd_int.row(q).dot(a.row(m)) + Nd_b.row(q).dot(a2.row(m));
      }
      const Vector fb = problem.bc.value(dnval, uval, nodes.boundary[q], alpha);
      for (int p = 0; p < n; ++p) {
        const double du = fd_step(uval[p]);
        Vector up = uval;
        up[p] += du;
        const Vector fu = (problem.bc.value(dnval, up, nodes.boundary[q], alpha) - fb) / du;
        const double dd = fd_step(dnval[p]);
        Vector dp = dnval;
        dp[p] += dd;
        const Vector fd = (problem.bc.value(dp, uval, nodes.boundary[q], alpha) - fb) / dd;
        for (int m = 0; m < n; ++m)
          for (int q2 = 0; q2 < Nb; ++q2)
            jac(m * Nb + q, p * Nb + q2) += fu[m] * W_b(q, q2) + fd[m] * Nd_b(q, q2);
      }
    }

    const Vector step = linalg::lu_factor(jac).solve(r);
    double lam = 1.0;
    const double r0 = r.norm();
    while (lam >= 1e-3) {
      Matrix trial = a2;
      for (int m = 0; m < n; ++m)
        trial.row(m) -= lam * step.segment(m * Nb, Nb).transpose();
      const Vector rt = boundary_residual(trial);
      if (rt.norm() < r0 * (1.0 - 1e-4 * lam) || rt.cwiseAbs().maxCoeff() <= tol) {
        a2 = trial;
        r = rt;
        break;
      }
      lam *= 0.5;
    }
    if (lam < 1e-3)
      throw AssemblyError("boundary elimination failed: damped Newton stalled");
  }
  throw AssemblyError("boundary elimination failed: nonlinear iteration limit");
}

// ---------------------------------------------------------------------------
// residual and Jacobians
// ---------------------------------------------------------------------------

Vector DiscretizedSystem::residual(const Vector& u, double alpha) const {
  if (u.size() != n * N)
    throw std::invalid_argument("residual: state must have n*N entries");

  const Matrix D = problem.diffusion(alpha);
  if (D.rows() != n || D.cols() != dim)
    throw AssemblyError("residual: diffusion callback must return n x dim");

  if (!problem.bc.linear) return residual_direct(u, alpha);

  std::vector<std::vector<Vector>> lap(n), grad(n);
  for (int m = 0; m < n; ++m) {
    const Vector um = u.segment(m * N, N);
    const Vector gv = boundary_gamma_vec(m, alpha);
    lap[m].resize(dim);
    grad[m].resize(dim);
    for (int ax = 0; ax < dim; ++ax) {
      lap[m][ax] = comp[m].lap_nodal[ax] * um + comp[m].lap_bvals[ax] * gv;
      grad[m][ax] = comp[m].grad_nodal[ax] * um + comp[m].grad_bvals[ax] * gv;
    }
  }

  Vector out(n * N);
  Matrix g(n, dim);
  Vector uv(n);
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < n; ++m) {
      uv[m] = u[m * N + i];
      for (int ax = 0; ax < dim; ++ax) g(m, ax) = grad[m][ax][i];
    }
    const Vector f = problem.reaction.value(g, uv, nodes.interior[i], alpha);
    for (int m = 0; m < n; ++m) {
      double diff = 0.0;
      for (int ax = 0; ax < dim; ++ax) diff += D(m, ax) * lap[m][ax][i];
      out[m * N + i] = diff - f[m];
    }
  }
  return out;
}

Vector DiscretizedSystem::residual_direct(const Vector& u, double alpha) const {
  if (u.size() != n * N)
    throw std::invalid_argument("residual_direct: state must have n*N entries");
  const Matrix D = problem.diffusion(alpha);

  Matrix u_nodal(n, N);
  for (int m = 0; m < n; ++m) u_nodal.row(m) = u.segment(m * N, N).transpose();

  Matrix a(n, N);
  if (problem.bc.linear) {
    // Fresh elimination: rebuild and refactor the boundary block and gamma.
    for (int m = 0; m < n; ++m) {
      Matrix mb = Matrix::Zero(Nb, Nb);
      Matrix m1 = Matrix::Zero(Nb, N);
      Vector gv(Nb);
      for (int q = 0; q < Nb; ++q) {
        const Point& p = nodes.boundary[q];
        const double b1 = problem.bc.beta1(p, alpha)[m];
        const double b0 = problem.bc.beta0(p, alpha)[m];
        mb.row(q) = b1 * Nd_b.row(q) + b0 * W_b.row(q);
        m1.row(q) = b1 * Nd_int.row(q) + b0 * W_int.row(q);
        gv[q] = problem.bc.gamma(p, alpha)[m];
      }
      const auto mb_lu = linalg::lu_factor(mb);
      const Matrix B = -refined_solve(mb_lu, mb, m1);
      const Vector bm = -refined_solve(mb_lu, mb, gv);
      const Matrix gamma = V_int + V_b * B;
      const Vector rhs = u_nodal.row(m).transpose() - V_b * bm;
      a.row(m) = linalg::lu_factor(gamma).solve(rhs).transpose();
    }
  } else {
    a = gamma_inverse(u_nodal, alpha);
  }
  const Matrix a2 = solve_boundary_coeffs(a, alpha);

  Vector out(n * N);
  Matrix g(n, dim);
  Vector uv(n);
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < n; ++m) {
      uv[m] = V_int.row(i).dot(a.row(m)) + V_b.row(i).dot(a2.row(m));
      for (int ax = 0; ax < dim; ++ax)
        g(m, ax) = D_int[ax].row(i).dot(a.row(m)) + D_b[ax].row(i).dot(a2.row(m));
    }
    const Vector f = problem.reaction.value(g, uv, nodes.interior[i], alpha);
    for (int m = 0; m < n; ++m) {
      double diff = 0.0;
      for (int ax = 0; ax < dim; ++ax)
        diff += D(m, ax) *
                (L_int[ax].row(i).dot(a.row(m)) + L_b[ax].row(i).dot(a2.row(m)));
      out[m * N + i] = diff - f[m];
    }
  }
  return out;
}

Matrix DiscretizedSystem::jacobian_u(const Vector& u, double alpha) const {
  if (!problem.bc.linear || !problem.reaction.du) return jacobian_u_fd(u, alpha);

  const Matrix D = problem.diffusion(alpha);
  Matrix jac = Matrix::Zero(n * N, n * N);

  std::vector<std::vector<Vector>> grad(n);
  for (int m = 0; m < n; ++m) {
    const Vector um = u.segment(m * N, N);
    const Vector gv = boundary_gamma_vec(m, alpha);
    grad[m].resize(dim);
    for (int ax = 0; ax < dim; ++ax)
      grad[m][ax] = comp[m].grad_nodal[ax] * um + comp[m].grad_bvals[ax] * gv;
    for (int ax = 0; ax < dim; ++ax)
      jac.block(m * N, m * N, N, N) += D(m, ax) * comp[m].lap_nodal[ax];
  }

  Matrix g(n, dim);
  Vector uv(n);
  const bool has_dgrad = static_cast<bool>(problem.reaction.dgrad);
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < n; ++m) {
      uv[m] = u[m * N + i];
      for (int ax = 0; ax < dim; ++ax) g(m, ax) = grad[m][ax][i];
    }
    const Matrix dfdu = problem.reaction.du(g, uv, nodes.interior[i], alpha);
    for (int m = 0; m < n; ++m)
      for (int p = 0; p < n; ++p) jac(m * N + i, p * N + i) -= dfdu(m, p);
    if (has_dgrad) {
      const Matrix dfdg = problem.reaction.dgrad(g, uv, nodes.interior[i], alpha);
      for (int m = 0; m < n; ++m)
        for (int p = 0; p < n; ++p)
          for (int ax = 0; ax < dim; ++ax) {
            const double w = dfdg(m, p * dim + ax);
            if (w != 0.0)
              jac.row(m * N + i).segment(p * N, N) -=
                  w * comp[p].grad_nodal[ax].row(i);
          }
    }
  }
  return jac;
}

Matrix DiscretizedSystem::jacobian_u_fd(const Vector& u, double alpha) const {
  const Vector base = residual(u, alpha);
  Matrix jac(n * N, n * N);
  Vector up = u;
  for (int k = 0; k < n * N; ++k) {
    const double d = fd_step(u[k]);
    up[k] = u[k] + d;
    jac.col(k) = (residual(up, alpha) - base) / d;
    up[k] = u[k];
  }
  return jac;
}

Vector DiscretizedSystem::jacobian_alpha(const Vector& u, double alpha) const {
  if (!problem.bc.linear || !problem.reaction.dalpha) return jacobian_alpha_fd(u, alpha);

  const Matrix D = problem.diffusion(alpha);
  Matrix Dp;
  if (problem.diffusion_dalpha) {
    Dp = problem.diffusion_dalpha(alpha);
  } else {
    const double d = fd_step(alpha);
    Dp = (problem.diffusion(alpha + d) - problem.diffusion(alpha - d)) / (2.0 * d);
  }

  std::vector<std::vector<Vector>> lap(n), grad(n), dlap(n), dgrad(n);
  for (int m = 0; m < n; ++m) {
    const Vector um = u.segment(m * N, N);
    const Vector gv = boundary_gamma_vec(m, alpha);
    const Vector dgv = boundary_gamma_dalpha_vec(m, alpha);
    lap[m].resize(dim);
    grad[m].resize(dim);
    dlap[m].resize(dim);
    dgrad[m].resize(dim);
    for (int ax = 0; ax < dim; ++ax) {
      lap[m][ax] = comp[m].lap_nodal[ax] * um + comp[m].lap_bvals[ax] * gv;
      grad[m][ax] = comp[m].grad_nodal[ax] * um + comp[m].grad_bvals[ax] * gv;
      dlap[m][ax] = comp[m].lap_bvals[ax] * dgv;
      dgrad[m][ax] = comp[m].grad_bvals[ax] * dgv;
    }
  }

  Vector out(n * N);
  Matrix g(n, dim);
  Vector uv(n);
  const bool has_dgrad = static_cast<bool>(problem.reaction.dgrad);
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < n; ++m) {
      uv[m] = u[m * N + i];
      for (int ax = 0; ax < dim; ++ax) g(m, ax) = grad[m][ax][i];
    }
    const Vector dfda = problem.reaction.dalpha(g, uv, nodes.interior[i], alpha);
    Matrix dfdg;
    if (has_dgrad) dfdg = problem.reaction.dgrad(g, uv, nodes.interior[i], alpha);
    for (int m = 0; m < n; ++m) {
      double v = -dfda[m];
      for (int ax = 0; ax < dim; ++ax) {
        v += Dp(m, ax) * lap[m][ax][i];
        v += D(m, ax) * dlap[m][ax][i];
        if (has_dgrad)
          for (int p = 0; p < n; ++p) v -= dfdg(m, p * dim + ax) * dgrad[p][ax][i];
      }
      out[m * N + i] = v;
    }
  }
  return out;
}

Vector DiscretizedSystem::jacobian_alpha_fd(const Vector& u, double alpha) const {
  const double d = fd_step(alpha);
  return (residual(u, alpha + d) - residual(u, alpha)) / d;
}

// ---------------------------------------------------------------------------
// expansion handling
// ---------------------------------------------------------------------------

Expansion DiscretizedSystem::expansion_from_nodal(const NodalState& state) const {
  Matrix u_nodal(n, N);
  for (int m = 0; m < n; ++m) u_nodal.row(m) = state.u.segment(m * N, N).transpose();
  const Matrix a = gamma_inverse(u_nodal, state.alpha);
  Expansion e;
  e.a0 = a.col(0);
  e.a1 = a.rightCols(N - 1);
  e.a2 = solve_boundary_coeffs(a, state.alpha);
  return e;
}

Vector DiscretizedSystem::eval_uh(const Expansion& e, const Point& p) const {
  const Point ref = nodes.interior[N - 1];
  const double cref = shapes.c[N - 1];
  const double vref = mq_value(ref, cref, p);
  Vector out = e.a0;
  for (int j = 0; j + 1 < N; ++j) {
    const double xi = mq_value(nodes.interior[j], shapes.c[j], p) - vref;
    out += e.a1.col(j) * xi;
  }
  for (int q = 0; q < Nb; ++q) {
    const double xi = mq_value(nodes.boundary[q], shapes.c[N + q], p) - vref;
    out += e.a2.col(q) * xi;
  }
  return out;
}

Matrix DiscretizedSystem::eval_grad_uh(const Expansion& e, const Point& p) const {
  const Point ref = nodes.interior[N - 1];
  const double cref = shapes.c[N - 1];
  const Point gref = mq_gradient(ref, cref, p);
  Matrix out = Matrix::Zero(n, dim);
  auto add = [&](const Point& g, const Vector& coeff) {
    for (int m = 0; m < n; ++m) {
      out(m, 0) += coeff[m] * (g.x - gref.x);
      if (dim == 2) out(m, 1) += coeff[m] * (g.y - gref.y);
    }
  };
  for (int j = 0; j + 1 < N; ++j)
    add(mq_gradient(nodes.interior[j], shapes.c[j], p), e.a1.col(j));
  for (int q = 0; q < Nb; ++q)
    add(mq_gradient(nodes.boundary[q], shapes.c[N + q], p), e.a2.col(q));
  return out;
}

Vector DiscretizedSystem::eval_lap_uh(const Expansion& e, const Point& p) const {
  const Point ref = nodes.interior[N - 1];
  const double cref = shapes.c[N - 1];
  const double lref = mq_laplacian(ref, cref, p, dim);
  Vector out = Vector::Zero(n);
  for (int j = 0; j + 1 < N; ++j)
    out += e.a1.col(j) * (mq_laplacian(nodes.interior[j], shapes.c[j], p, dim) - lref);
  for (int q = 0; q < Nb; ++q)
    out += e.a2.col(q) * (mq_laplacian(nodes.boundary[q], shapes.c[N + q], p, dim) - lref);
  return out;
}

// ---------------------------------------------------------------------------
// nodal operator for linear homogeneous problems
// ---------------------------------------------------------------------------

Matrix DiscretizedSystem::build_nodal_operator(double alpha) const {
  const Vector zero = Vector::Zero(n * N);
  const Vector r0 = residual(zero, alpha);
  if (r0.cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument(
        "build_nodal_operator: problem is not homogeneous (residual(0) != 0)");

  const Matrix j0 = jacobian_u(zero, alpha);
  Vector probe(n * N);
  for (int k = 0; k < n * N; ++k) probe[k] = (k % 2 == 0) ? 0.7 : -0.4;
  const Matrix j1 = jacobian_u(probe, alpha);
  const double scale = 1.0 + j0.cwiseAbs().maxCoeff();
  if ((j1 - j0).cwiseAbs().maxCoeff() > 1e-6 * scale)
    throw std::invalid_argument(
        "build_nodal_operator: problem is not linear (state-dependent Jacobian)");
  return -j0;
}

} // namespace mqcont
