#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mqcont/catalog.hpp"
#include "mqcont/continuation.hpp"
#include "mqcont/linalg.hpp"

using namespace mqcont;

namespace {

// determinant of the 2x2 linearization block of the Brusselator about the
// homogeneous state, with per-component diffusion eigenvalue kappa
double brusselator_block_det(double a, double b, double d1k, double d2k) {
  const double j11 = b - 1.0 - d1k;
  const double j12 = a * a;
  const double j21 = -b;
  const double j22 = -a * a - d2k;
  return j11 * j22 - j12 * j21;
}

} // namespace

TEST_CASE("catalog: ids, overrides and parameter validation") {
  const auto ids = catalog_ids();
  CHECK(ids.size() == 6);
  for (const auto& id : ids) CHECK_NOTHROW(make_catalog_entry(id));
  CHECK_THROWS_AS(make_catalog_entry("nope"), std::invalid_argument);
  CHECK_THROWS_AS(make_catalog_entry("bratu_1d", {{"a", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_catalog_entry("brusselator_1d", {{"zz", 1.0}}),
                  std::invalid_argument);

  const CatalogEntry e = make_catalog_entry("brusselator_1d");
  CHECK(e.params.at("a") == 4.0);
  CHECK(e.params.at("d1") == 1.0);
  CHECK(e.params.at("d2") == 2.0);
  CHECK(e.params.at("l") == 1.0);
  CHECK(e.alpha_name == "b");

  const CatalogEntry o = make_catalog_entry("brusselator_2d", {{"l", 10.0}});
  const Matrix d = o.problem.diffusion(0.0);
  CHECK(d(0, 0) == doctest::Approx(1.0 / 100.0).epsilon(1e-15));
  CHECK(d(0, 1) == 1.0);
  CHECK(d(1, 0) == doctest::Approx(2.0 / 100.0).epsilon(1e-15));
  CHECK(d(1, 1) == 2.0);
}

TEST_CASE("laplace eigen oracles") {
  CHECK(oracle_laplace_eigenvalue(1) == doctest::Approx(M_PI * M_PI).epsilon(1e-15));
  CHECK(oracle_laplace_eigenvalue(3) == doctest::Approx(9.0 * M_PI * M_PI).epsilon(1e-15));
  CHECK(oracle_laplace_eigenfunction(2, 0.25) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(oracle_laplace_eigenfunction(4, 0.5)) <= 1e-14);
}

TEST_CASE("FD matrix eigenvalues match the closed form") {
  for (int mesh : {8, 47, 76, 117}) {
    CAPTURE(mesh);
    const Matrix a = fd_laplace_matrix(mesh);
    REQUIRE(a.rows() == mesh - 1);
    // symmetric tridiagonal with the right entries
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a(0, 0) == doctest::Approx(2.0 * mesh * mesh).epsilon(1e-15));

    const auto sp = linalg::eigen_full(a);
    std::vector<double> got(a.rows());
    for (int i = 0; i < a.rows(); ++i) got[i] = sp.eigenvalues[i].real();
    std::sort(got.begin(), got.end());
    const std::vector<double> want = fd_laplace_eigenvalues(mesh);
    REQUIRE(got.size() == want.size());
    for (size_t m = 0; m < want.size(); ++m)
      CHECK(std::abs(got[m] - want[m]) <= 1e-10 * want[m]);
  }
  // the closed form tends to pi^2 m^2 from below as the mesh refines
  const auto ev = fd_laplace_eigenvalues(1000);
  CHECK(ev[0] < M_PI * M_PI);
  CHECK(ev[0] == doctest::Approx(M_PI * M_PI).epsilon(1e-5));
}

TEST_CASE("Gelfand fold oracle") {
  const double fold = oracle_bratu_fold_1d();
  CHECK(fold == doctest::Approx(3.513830719).epsilon(1e-9));

  // independent bisection on theta tanh(theta/4) = 4
  double lo = 4.0, hi = 6.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * std::tanh(mid / 4.0) - 4.0 < 0.0 ? lo : hi) = mid;
  }
  const double theta = 0.5 * (lo + hi);
  const double ch = std::cosh(theta / 4.0);
  CHECK(fold == doctest::Approx(theta * theta / (2.0 * ch * ch)).epsilon(1e-12));

  CHECK(reference_bratu_fold_2d() == 6.8084);
}

TEST_CASE("1D Brusselator bifurcation values and their defining property") {
  const CatalogEntry e = make_catalog_entry("brusselator_1d");
  const double b1 = oracle_brusselator_1d_branch(e, 1);
  const double b2 = oracle_brusselator_1d_branch(e, 2);
  CHECK(b1 == doctest::Approx(19.680174).epsilon(1e-7));
  CHECK(b2 == doctest::Approx(48.681060).epsilon(1e-7));

  // independent check: the linearization block is singular exactly there
  for (int n : {1, 2, 3}) {
    const double b = oracle_brusselator_1d_branch(e, n);
    const double kap = M_PI * M_PI * n * n; // l = 1
    CHECK(std::abs(brusselator_block_det(4.0, b, 1.0 * kap, 2.0 * kap)) <= 1e-8 * b * b);
  }
}

TEST_CASE("2D Brusselator stationary values, degeneracy, and Hopf") {
  const CatalogEntry e = make_catalog_entry("brusselator_2d");
  CHECK(oracle_brusselator_2d_stationary(e, 1, 1) ==
        doctest::Approx(29.144494).epsilon(1e-7));
  CHECK(oracle_brusselator_2d_stationary(e, 2, 2) ==
        doctest::Approx(88.058156).epsilon(1e-7));
  // (1,2) and (2,1) collide on the unit square: a double root the scalar
  // sign-change test cannot see
  CHECK(oracle_brusselator_2d_stationary(e, 1, 2) ==
        doctest::Approx(oracle_brusselator_2d_stationary(e, 2, 1)).epsilon(1e-14));
  CHECK(oracle_brusselator_2d_stationary(e, 1, 2) ==
        doctest::Approx(58.510).epsilon(1e-4));

  for (auto [m, n] : {std::pair{1, 1}, {2, 2}, {1, 2}}) {
    const double b = oracle_brusselator_2d_stationary(e, m, n);
    const double kap = M_PI * M_PI * (m * m + n * n); // l = 1
    CHECK(std::abs(brusselator_block_det(4.0, b, kap, 2.0 * kap)) <= 1e-8 * b * b);
  }

  const CatalogEntry h = make_catalog_entry(
      "brusselator_2d", {{"a", 10.0}, {"d1", 1.0}, {"d2", 1.0}, {"l", 10.0}});
  const double bh = oracle_brusselator_2d_hopf(h, 1, 2);
  CHECK(bh == doctest::Approx(101.0 + 8.02 * M_PI * M_PI).epsilon(1e-12));
  CHECK(bh == doctest::Approx(180.15).epsilon(5e-5));
  // At this value the (1,2) mode block has zero trace but *negative*
  // determinant: the eigenvalue pair summing to zero is real (+/- sqrt(-det)),
  // a neutral saddle rather than a complex crossing.  Pair-sum style test
  // functions fire here; a complex-pair test cannot.
  const double kap = M_PI * M_PI * (1.0 / 100.0 + 4.0);
  const double tr = (bh - 1.0 - kap) + (-100.0 - kap);
  CHECK(std::abs(tr) <= 1e-10 * bh);
  const double det = brusselator_block_det(10.0, bh, kap, kap);
  CHECK(det < 0.0);
  CHECK(std::sqrt(-det) == doctest::Approx(38.29).epsilon(1e-3));
  // the two-parameter family does have genuine complex crossings: (1,1) at
  // the same parameters has positive block determinant at its trace zero
  const double b11 = oracle_brusselator_2d_hopf(h, 1, 1);
  const double kap11 = M_PI * M_PI * (1.0 / 100.0 + 1.0);
  CHECK(brusselator_block_det(10.0, b11, kap11, kap11) > 0.0);
  CHECK(b11 == doctest::Approx(101.0 + 2.0 * kap11).epsilon(1e-12));
}

TEST_CASE("pattern-formation bifurcation ladder") {
  const CatalogEntry e = make_catalog_entry("pattern_1d");
  const auto ls = oracle_pattern_bifurcations(e, 0.04, 0.33);

  // the two mode families on [0.04, 0.33]
  CHECK(std::is_sorted(ls.begin(), ls.end()));
  REQUIRE(ls.size() == 11);

  const double table[] = {0.0465, 0.0793, 0.093, 0.140, 0.159, 0.186,
                          0.233,  0.238,  0.317};
  for (double want : table) {
    const bool hit = std::any_of(ls.begin(), ls.end(), [&](double l) {
      return std::abs(l - want) <= 5e-4;
    });
    CAPTURE(want);
    CHECK(hit);
  }
  // the extra crossing just below 0.28
  const bool extra = std::any_of(ls.begin(), ls.end(), [&](double l) {
    return std::abs(l - 0.279) <= 1e-3;
  });
  CHECK(extra);

  // each value satisfies the dispersion relation: the mode block
  //   [[a11 - mu, a12], [a21, a22 - delta*mu]]  is singular
  const double kappa = e.params.at("kappa"), beta = e.params.at("beta"),
               delta = e.params.at("delta"), d1 = e.params.at("d1"),
               omega = e.params.at("omega");
  const double u0 = beta / (kappa + beta * beta), v0 = beta;
  const double a11 = -kappa - v0 * v0, a12 = -2.0 * u0 * v0;
  const double a21 = kappa + v0 * v0, a22 = 2.0 * u0 * v0 - 1.0;
  for (double l : ls) {
    double best = 1e300;
    for (int n = 1; n <= 8; ++n) {
      const double mu = d1 * (n * M_PI) * (n * M_PI) / (omega * l * l);
      best = std::min(best,
                      std::abs((a11 - mu) * (a22 - delta * mu) - a12 * a21));
    }
    CHECK(best <= 1e-9);
  }

  // rho is inert in the pure-Neumann configuration
  const CatalogEntry e2 = make_catalog_entry("pattern_1d", {{"rho", 7.5}});
  const auto ls2 = oracle_pattern_bifurcations(e2, 0.04, 0.33);
  REQUIRE(ls2.size() == ls.size());
  for (size_t i = 0; i < ls.size(); ++i) CHECK(ls2[i] == ls[i]);
}

TEST_CASE("FD cross-check system") {
  SUBCASE("linear structure matches the closed-form matrix") {
    const CatalogEntry e = make_catalog_entry("laplace_eigen_1d");
    const FdSystem fd = fd_discretize(e, 12);
    const Matrix a = fd_laplace_matrix(12);
    Vector u(11);
    for (int i = 0; i < 11; ++i) u[i] = std::sin(1.0 + 0.37 * i);
    CHECK((fd.residual(u, 0.0) + a * u).cwiseAbs().maxCoeff() <= 1e-10 * u.norm());
  }

  SUBCASE("steady states are exact") {
    const CatalogEntry br = make_catalog_entry("brusselator_1d");
    const FdSystem fd = fd_discretize(br, 16);
    const Vector u0 = fd.initial_state(13.0);
    CHECK(fd.residual(u0, 13.0).cwiseAbs().maxCoeff() <= 1e-10);

    const CatalogEntry bt = make_catalog_entry("bratu_1d");
    const FdSystem fb = fd_discretize(bt, 16);
    CHECK(fb.residual(Vector::Zero(15), 0.0).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("grid points are the interior mesh") {
    const CatalogEntry e = make_catalog_entry("bratu_2d");
    const FdSystem fd = fd_discretize(e, 4);
    CHECK(fd.order() == 9);
    CHECK(fd.grid_point(0).x == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(fd.grid_point(0).y == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(fd.grid_point(5).x == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(fd.grid_point(5).y == doctest::Approx(0.5).epsilon(1e-15));
  }

  SUBCASE("non-Dirichlet entries are rejected") {
    CHECK_THROWS_AS(fd_discretize(make_catalog_entry("pattern_1d"), 10),
                    std::invalid_argument);
  }

  SUBCASE("fold of the FD-discretized Gelfand problem lands near 3.5138") {
    const CatalogEntry e = make_catalog_entry("bratu_1d");
    const FdSystem fd = fd_discretize(e, 40);
    ContinuationSettings s;
    s.alpha_lo = 0.0;
    s.alpha_hi = 4.0;
    s.detect_hopf = false; // dense spectra add nothing for this smoke check
    s.max_steps = 300;
    const auto r = run_continuation(fd, fd.initial_state(0.0), 0.0, s);
    REQUIRE(r.events.size() >= 1);
    CHECK(r.events[0].kind == EventKind::fold);
    CHECK(r.events[0].alpha == doctest::Approx(oracle_bratu_fold_1d()).epsilon(5e-3));
  }
}

TEST_CASE("initial states by entry") {
  const NodeSet nodes = generate_uniform_nodes(1, 9);
  CHECK(make_catalog_entry("bratu_1d").initial_state(0.0, nodes).cwiseAbs().maxCoeff() ==
        0.0);
  const Vector ub = make_catalog_entry("brusselator_1d").initial_state(18.0, nodes);
  REQUIRE(ub.size() == 16);
  CHECK(ub[0] == 4.0);
  CHECK(ub[8] == doctest::Approx(4.5).epsilon(1e-15));
  const Vector up = make_catalog_entry("pattern_1d").initial_state(0.05, nodes);
  CHECK(up[0] == doctest::Approx(1.0 / (0.001 + 1.0)).epsilon(1e-15));
  CHECK(up[8] == doctest::Approx(1.0).epsilon(1e-15));
}
