#include "mqcont/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mqcont {

namespace {

constexpr double kPi = std::numbers::pi;

std::map<std::string, double> merge_params(std::map<std::string, double> defaults,
                                           const std::map<std::string, double>& overrides,
                                           const std::string& id) {
  for (const auto& [key, val] : overrides) {
    auto it = defaults.find(key);
    if (it == defaults.end())
      throw std::invalid_argument("catalog entry '" + id + "' has no parameter '" + key + "'");
    it->second = val;
  }
  return defaults;
}

Vector const_vec(int n, double v) { return Vector::Constant(n, v); }

/// Dirichlet condition u_m = g_m expressed as f_b = u - g.
BoundaryCondition dirichlet_bc(std::function<Vector(const Point&, double)> g,
                               std::function<Vector(const Point&, double)> dg, int n) {
  BoundaryCondition bc;
  bc.linear = true;
  bc.beta1 = [n](const Point&, double) { return const_vec(n, 0.0); };
  bc.beta0 = [n](const Point&, double) { return const_vec(n, 1.0); };
  bc.gamma = [g](const Point& p, double a) { return Vector(-g(p, a)); };
  if (dg) bc.gamma_dalpha = [dg](const Point& p, double a) { return Vector(-dg(p, a)); };
  bc.value = [g](const Vector&, const Vector& u, const Point& p, double a) {
    return Vector(u - g(p, a));
  };
  return bc;
}

CatalogEntry make_laplace_eigen_1d() {
  CatalogEntry e;
  e.id = "laplace_eigen_1d";
  e.alpha_name = "lambda";
  e.problem.n = 1;
  e.problem.dim = 1;
  e.problem.diffusion = [](double) { return Matrix::Ones(1, 1); };
  e.problem.diffusion_dalpha = [](double) { return Matrix::Zero(1, 1); };
  e.problem.reaction.value = [](const Matrix&, const Vector&, const Point&, double) {
    return const_vec(1, 0.0);
  };
  e.problem.reaction.du = [](const Matrix&, const Vector&, const Point&, double) {
    return Matrix::Zero(1, 1);
  };
  e.problem.reaction.dalpha = [](const Matrix&, const Vector&, const Point&, double) {
    return const_vec(1, 0.0);
  };
  auto zero = [](const Point&, double) { return const_vec(1, 0.0); };
  e.problem.bc = dirichlet_bc(zero, zero, 1);
  return e;
}

CatalogEntry make_bratu(int dim) {
  CatalogEntry e;
  e.id = dim == 1 ? "bratu_1d" : "bratu_2d";
  e.alpha_name = "lambda";
  e.problem.n = 1;
  e.problem.dim = dim;
  e.problem.diffusion = [dim](double) { return Matrix::Ones(1, dim); };
  e.problem.diffusion_dalpha = [dim](double) { return Matrix::Zero(1, dim); };
  // u'' + lambda e^u = 0  ->  reaction term f = -lambda e^u
  e.problem.reaction.value = [](const Matrix&, const Vector& u, const Point&, double a) {
    return const_vec(1, -a * std::exp(u[0]));
  };
  e.problem.reaction.du = [](const Matrix&, const Vector& u, const Point&, double a) {
    Matrix j(1, 1);
    j(0, 0) = -a * std::exp(u[0]);
    return j;
  };
  e.problem.reaction.dalpha = [](const Matrix&, const Vector& u, const Point&, double) {
    return const_vec(1, -std::exp(u[0]));
  };
  auto zero = [](const Point&, double) { return const_vec(1, 0.0); };
  e.problem.bc = dirichlet_bc(zero, zero, 1);
  return e;
}

CatalogEntry make_brusselator(int dim, const std::map<std::string, double>& overrides) {
  CatalogEntry e;
  e.id = dim == 1 ? "brusselator_1d" : "brusselator_2d";
  e.alpha_name = "b";
  e.params = merge_params({{"a", 4.0}, {"d1", 1.0}, {"d2", 2.0}, {"l", 1.0}}, overrides, e.id);
  const double a = e.params.at("a");
  const double d1 = e.params.at("d1");
  const double d2 = e.params.at("d2");
  const double l = e.params.at("l");

  e.problem.n = 2;
  e.problem.dim = dim;
  // Domain (0,l) x (0,1) rescaled to the unit square: the x-direction picks
  // up the 1/l^2 factor, the y-direction (2D only) keeps the bare diffusivity.
  e.problem.diffusion = [=](double) {
    Matrix d(2, dim);
    d(0, 0) = d1 / (l * l);
    d(1, 0) = d2 / (l * l);
    if (dim == 2) {
      d(0, 1) = d1;
      d(1, 1) = d2;
    }
    return d;
  };
  e.problem.diffusion_dalpha = [dim](double) { return Matrix::Zero(2, dim); };

  e.problem.reaction.value = [a](const Matrix&, const Vector& u, const Point&, double b) {
    Vector f(2);
    f[0] = (b + 1.0) * u[0] - u[0] * u[0] * u[1] - a;
    f[1] = -b * u[0] + u[0] * u[0] * u[1];
    return f;
  };
  e.problem.reaction.du = [](const Matrix&, const Vector& u, const Point&, double b) {
    Matrix j(2, 2);
    j(0, 0) = (b + 1.0) - 2.0 * u[0] * u[1];
    j(0, 1) = -u[0] * u[0];
    j(1, 0) = -b + 2.0 * u[0] * u[1];
    j(1, 1) = u[0] * u[0];
    return j;
  };
  e.problem.reaction.dalpha = [](const Matrix&, const Vector& u, const Point&, double) {
    Vector f(2);
    f[0] = u[0];
    f[1] = -u[0];
    return f;
  };

  auto g = [a](const Point&, double b) {
    Vector v(2);
    v[0] = a;
    v[1] = b / a;
    return v;
  };
  auto dg = [a](const Point&, double) {
    Vector v(2);
    v[0] = 0.0;
    v[1] = 1.0 / a;
    return v;
  };
  e.problem.bc = dirichlet_bc(g, dg, 2);
  return e;
}

CatalogEntry make_pattern_1d(const std::map<std::string, double>& overrides) {
  CatalogEntry e;
  e.id = "pattern_1d";
  e.alpha_name = "l";
  e.params = merge_params({{"d1", 1e-5},
                           {"omega", 1e-2},
                           {"delta", 0.14},
                           {"beta", 1.0},
                           {"kappa", 0.001},
                           {"theta1", 1.0},
                           {"theta2", 1.0},
                           {"theta3", 0.0},
                           {"rho", 1.0},
                           {"us", 0.0},
                           {"vs", 0.0}},
                          overrides, e.id);
  const double d1 = e.params.at("d1");
  const double omega = e.params.at("omega");
  const double delta = e.params.at("delta");
  const double beta = e.params.at("beta");
  const double kappa = e.params.at("kappa");
  const double th1 = e.params.at("theta1");
  const double th2 = e.params.at("theta2");
  const double th3 = e.params.at("theta3");
  const double rho = e.params.at("rho");
  const double us = e.params.at("us");
  const double vs = e.params.at("vs");

  e.problem.n = 2;
  e.problem.dim = 1;
  e.problem.diffusion = [=](double l) {
    Matrix d(2, 1);
    d(0, 0) = d1 / (omega * l * l);
    d(1, 0) = delta * d1 / (omega * l * l);
    return d;
  };
  e.problem.diffusion_dalpha = [=](double l) {
    Matrix d(2, 1);
    d(0, 0) = -2.0 * d1 / (omega * l * l * l);
    d(1, 0) = -2.0 * delta * d1 / (omega * l * l * l);
    return d;
  };

  e.problem.reaction.value = [=](const Matrix&, const Vector& u, const Point&, double) {
    Vector f(2);
    f[0] = kappa * u[0] + u[0] * u[1] * u[1] - beta;
    f[1] = -kappa * u[0] - u[0] * u[1] * u[1] + u[1];
    return f;
  };
  e.problem.reaction.du = [=](const Matrix&, const Vector& u, const Point&, double) {
    Matrix j(2, 2);
    j(0, 0) = kappa + u[1] * u[1];
    j(0, 1) = 2.0 * u[0] * u[1];
    j(1, 0) = -kappa - u[1] * u[1];
    j(1, 1) = -2.0 * u[0] * u[1] + 1.0;
    return j;
  };
  e.problem.reaction.dalpha = [](const Matrix&, const Vector&, const Point&, double) {
    return const_vec(2, 0.0);
  };

  // Homotopy boundary operator
  //   theta1 du/dn = rho (1 - theta1)(theta3 us - u)   (and likewise for v,
  //   scaled by delta); theta = 1 is the pure Neumann case.
  BoundaryCondition bc;
  bc.linear = true;
  bc.beta1 = [=](const Point&, double) {
    Vector b(2);
    b[0] = th1;
    b[1] = delta * th2;
    return b;
  };
  bc.beta0 = [=](const Point&, double) {
    Vector b(2);
    b[0] = rho * (1.0 - th1);
    b[1] = delta * rho * (1.0 - th2);
    return b;
  };
  bc.gamma = [=](const Point&, double) {
    Vector g(2);
    g[0] = -rho * (1.0 - th1) * th3 * us;
    g[1] = -delta * rho * (1.0 - th2) * th3 * vs;
    return g;
  };
  bc.gamma_dalpha = [](const Point&, double) { return const_vec(2, 0.0); };
  bc.value = [=](const Vector& dudn, const Vector& u, const Point&, double) {
    Vector f(2);
    f[0] = th1 * dudn[0] + rho * (1.0 - th1) * (u[0] - th3 * us);
    f[1] = delta * th2 * dudn[1] + delta * rho * (1.0 - th2) * (u[1] - th3 * vs);
    return f;
  };
  e.problem.bc = bc;
  return e;
}

} // namespace

std::vector<std::string> catalog_ids() {
  return {"laplace_eigen_1d", "bratu_1d",  "brusselator_1d",
          "pattern_1d",       "bratu_2d",  "brusselator_2d"};
}

CatalogEntry make_catalog_entry(const std::string& id,
                                const std::map<std::string, double>& overrides) {
  if (id == "laplace_eigen_1d" || id == "bratu_1d" || id == "bratu_2d") {
    if (!overrides.empty())
      throw std::invalid_argument("catalog entry '" + id + "' takes no parameters");
    if (id == "laplace_eigen_1d") return make_laplace_eigen_1d();
    return make_bratu(id == "bratu_1d" ? 1 : 2);
  }
  if (id == "brusselator_1d") return make_brusselator(1, overrides);
  if (id == "brusselator_2d") return make_brusselator(2, overrides);
  if (id == "pattern_1d") return make_pattern_1d(overrides);
  throw std::invalid_argument("unknown catalog entry '" + id + "'");
}

Vector CatalogEntry::initial_state(double alpha, const NodeSet& nodes) const {
  const int N = nodes.interior_count();
  Vector u0;
  if (id == "laplace_eigen_1d" || id == "bratu_1d" || id == "bratu_2d") {
    u0 = Vector::Zero(N);
  } else if (id == "brusselator_1d" || id == "brusselator_2d") {
    const double a = params.at("a");
    u0.resize(2 * N);
    u0.head(N).setConstant(a);
    u0.tail(N).setConstant(alpha / a);
  } else if (id == "pattern_1d") {
    const double beta = params.at("beta");
    const double kappa = params.at("kappa");
    u0.resize(2 * N);
    u0.head(N).setConstant(beta / (kappa + beta * beta));
    u0.tail(N).setConstant(beta);
  } else {
    throw std::invalid_argument("initial_state: unknown entry '" + id + "'");
  }
  return u0;
}

// ---------------------------------------------------------------------------
// closed-form references
// ---------------------------------------------------------------------------

double oracle_laplace_eigenvalue(int m) { return kPi * kPi * m * m; }

double oracle_laplace_eigenfunction(int m, double x) { return std::sin(kPi * m * x); }

std::vector<double> fd_laplace_eigenvalues(int mesh_n) {
  std::vector<double> ev;
  ev.reserve(mesh_n - 1);
  for (int m = 1; m < mesh_n; ++m) {
    const double s = std::sin(kPi * m / (2.0 * mesh_n));
    ev.push_back(4.0 * mesh_n * mesh_n * s * s);
  }
  return ev;
}

Matrix fd_laplace_matrix(int mesh_n) {
  const int k = mesh_n - 1;
  const double h2 = 1.0 / (mesh_n * static_cast<double>(mesh_n));
  Matrix a = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    a(i, i) = 2.0 / h2;
    if (i > 0) a(i, i - 1) = -1.0 / h2;
    if (i + 1 < k) a(i, i + 1) = -1.0 / h2;
  }
  return a;
}

double oracle_bratu_fold_1d() {
  // Newton on p(theta) = theta tanh(theta/4) - 4; the root is near 4.8.
  double th = 4.8;
  for (int i = 0; i < 60; ++i) {
    const double t = std::tanh(th / 4.0);
    const double p = th * t - 4.0;
    const double dp = t + th * (1.0 - t * t) / 4.0;
    const double step = p / dp;
    th -= step;
    if (std::abs(step) < 1e-15) break;
  }
  const double ch = std::cosh(th / 4.0);
  return th * th / (2.0 * ch * ch);
}

double reference_bratu_fold_2d() { return 6.8084; }

namespace {

double param(const CatalogEntry& e, const char* name) {
  auto it = e.params.find(name);
  if (it == e.params.end())
    throw std::invalid_argument(std::string("entry '") + e.id + "' has no parameter '" +
                                name + "'");
  return it->second;
}

} // namespace

double oracle_brusselator_1d_branch(const CatalogEntry& e, int n_mode) {
  const double a = param(e, "a"), d1 = param(e, "d1"), d2 = param(e, "d2"),
               l = param(e, "l");
  const double n2 = static_cast<double>(n_mode) * n_mode;
  return 1.0 + (d1 / d2) * a * a + kPi * kPi * n2 * d1 / (l * l) +
         (l * l / (kPi * kPi * n2)) * (a * a / d2);
}

double oracle_brusselator_2d_stationary(const CatalogEntry& e, int m_mode, int n_mode) {
  const double a = param(e, "a"), d1 = param(e, "d1"), d2 = param(e, "d2"),
               l = param(e, "l");
  const double m2 = static_cast<double>(m_mode) * m_mode;
  const double n2 = static_cast<double>(n_mode) * n_mode;
  return 1.0 + (d1 / d2) * a * a + d1 * kPi * kPi * (m2 / (l * l) + n2) +
         (a * a / (kPi * kPi * d2)) * (l * l / (m2 + l * l * n2));
}

double oracle_brusselator_2d_hopf(const CatalogEntry& e, int m_mode, int n_mode) {
  const double a = param(e, "a"), d1 = param(e, "d1"), d2 = param(e, "d2"),
               l = param(e, "l");
  const double m2 = static_cast<double>(m_mode) * m_mode;
  const double n2 = static_cast<double>(n_mode) * n_mode;
  return 1.0 + a * a + (d1 + d2) * (m2 / (l * l) + n2) * kPi * kPi;
}

std::vector<double> oracle_pattern_bifurcations(const CatalogEntry& e, double l_lo,
                                                double l_hi) {
  const double d1 = param(e, "d1"), omega = param(e, "omega"), delta = param(e, "delta"),
               beta = param(e, "beta"), kappa = param(e, "kappa");
  const double u0 = beta / (kappa + beta * beta);
  const double v0 = beta;
  const double a11 = -kappa - v0 * v0;
  const double a12 = -2.0 * u0 * v0;
  const double a21 = kappa + v0 * v0;
  const double a22 = 2.0 * u0 * v0 - 1.0;

  // Mode kappa_n = (n pi)^2 crosses when  delta mu^2 - (delta a11 + a22) mu
  // + det J = 0  with mu = d1 kappa_n / (omega l^2).
  const double b = -(delta * a11 + a22);
  const double c = a11 * a22 - a12 * a21;
  const double disc = b * b - 4.0 * delta * c;
  std::vector<double> out;
  if (disc <= 0.0) return out;
  const double r = std::sqrt(disc);
  const double mu_roots[2] = {(-b + r) / (2.0 * delta), (-b - r) / (2.0 * delta)};
  for (double mu : mu_roots) {
    if (mu <= 0.0) continue;
    const double base = std::sqrt(d1 / (omega * mu));  // l for mode n = 1/pi
    for (int n = 1;; ++n) {
      const double l = n * kPi * base;
      if (l > l_hi) break;
      if (l >= l_lo) out.push_back(l);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// finite-difference cross check
// ---------------------------------------------------------------------------

FdSystem::FdSystem(CatalogEntry entry, int mesh_n)
    : entry_(std::move(entry)), mesh_(mesh_n) {
  if (mesh_ < 2) throw std::invalid_argument("fd_discretize: need at least 2 intervals");
  n_ = entry_.problem.n;
  dim_ = entry_.problem.dim;
  per_axis_ = mesh_ - 1;
  count_ = dim_ == 1 ? per_axis_ : per_axis_ * per_axis_;
  h_ = 1.0 / mesh_;
  if (!entry_.problem.bc.linear)
    throw std::invalid_argument("FD comparison unavailable: nonlinear boundary conditions");
  // Dirichlet only: beta1 must vanish on the boundary.
  const Point probe{0.0, 0.0};
  if (entry_.problem.bc.beta1(probe, 0.0).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("FD comparison unavailable: non-Dirichlet boundary conditions");
}

Point FdSystem::grid_point(int i) const {
  if (dim_ == 1) return {(i + 1) * h_, 0.0};
  return {(i % per_axis_ + 1) * h_, (i / per_axis_ + 1) * h_};
}

double FdSystem::dirichlet_value(int m, const Point& p, double alpha) const {
  const double b0 = entry_.problem.bc.beta0(p, alpha)[m];
  const double g = entry_.problem.bc.gamma(p, alpha)[m];
  return -g / b0;
}

Vector FdSystem::initial_state(double alpha) const {
  NodeSet fake;  // only the interior count matters for catalog initial states
  fake.dim = dim_;
  fake.ns = mesh_;
  fake.h = h_;
  fake.interior.resize(count_);
  return entry_.initial_state(alpha, fake);
}

Vector FdSystem::residual(const Vector& u, double alpha) const {
  if (u.size() != n_ * count_)
    throw std::invalid_argument("FdSystem::residual: wrong state size");
  const Matrix D = entry_.problem.diffusion(alpha);
  Vector out(n_ * count_);

  auto value_at = [&](int m, int ix, int iy) -> double {
    // ix, iy are mesh indices in 0..mesh_; interior unknowns at 1..mesh_-1
    const bool bx = ix == 0 || ix == mesh_;
    const bool by = dim_ == 2 && (iy == 0 || iy == mesh_);
    if (bx || by)
      return dirichlet_value(m, {ix * h_, dim_ == 2 ? iy * h_ : 0.0}, alpha);
    const int idx =
        dim_ == 1 ? (ix - 1) : (iy - 1) * per_axis_ + (ix - 1);
    return u[m * count_ + idx];
  };

  const double inv_h2 = 1.0 / (h_ * h_);
  Matrix grad(n_, dim_);
  Vector uv(n_);
  for (int i = 0; i < count_; ++i) {
    const int ix = dim_ == 1 ? i + 1 : i % per_axis_ + 1;
    const int iy = dim_ == 1 ? 0 : i / per_axis_ + 1;
    const Point p = grid_point(i);
    for (int m = 0; m < n_; ++m) {
      uv[m] = u[m * count_ + i];
      grad(m, 0) = (value_at(m, ix + 1, iy) - value_at(m, ix - 1, iy)) / (2.0 * h_);
      if (dim_ == 2)
        grad(m, 1) = (value_at(m, ix, iy + 1) - value_at(m, ix, iy - 1)) / (2.0 * h_);
    }
    const Vector f = entry_.problem.reaction.value(grad, uv, p, alpha);
    for (int m = 0; m < n_; ++m) {
      double diff = D(m, 0) * (value_at(m, ix + 1, iy) - 2.0 * uv[m] + value_at(m, ix - 1, iy)) *
                    inv_h2;
      if (dim_ == 2)
        diff += D(m, 1) *
                (value_at(m, ix, iy + 1) - 2.0 * uv[m] + value_at(m, ix, iy - 1)) * inv_h2;
      out[m * count_ + i] = diff - f[m];
    }
  }
  return out;
}

Matrix FdSystem::jacobian_u(const Vector& u, double alpha) const {
  const Vector base = residual(u, alpha);
  Matrix jac(order(), order());
  Vector up = u;
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  for (int k = 0; k < order(); ++k) {
    const double d = eps * (1.0 + std::abs(u[k]));
    up[k] = u[k] + d;
    jac.col(k) = (residual(up, alpha) - base) / d;
    up[k] = u[k];
  }
  return jac;
}

Vector FdSystem::jacobian_alpha(const Vector& u, double alpha) const {
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  const double d = eps * (1.0 + std::abs(alpha));
  return (residual(u, alpha + d) - residual(u, alpha)) / d;
}

FdSystem fd_discretize(const CatalogEntry& entry, int mesh_n) {
  return FdSystem(entry, mesh_n);
}

} // namespace mqcont
