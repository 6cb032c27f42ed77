#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mqcont/catalog.hpp"
#include "mqcont/continuation.hpp"
#include "mqcont/system.hpp"

using namespace mqcont;

namespace {

/// G(u, alpha) = u - alpha: a straight line through the origin.
struct LineProblem : ContinuationProblem {
  int order() const override { return 1; }
  Vector residual(const Vector& u, double a) const override {
    return Vector::Constant(1, u[0] - a);
  }
  Matrix jacobian_u(const Vector&, double) const override {
    return Matrix::Constant(1, 1, 1.0);
  }
  Vector jacobian_alpha(const Vector&, double) const override {
    return Vector::Constant(1, -1.0);
  }
};

/// G(u, alpha) = u^2 + alpha^2 - 1: the unit circle, with folds at u = 0.
struct CircleProblem : ContinuationProblem {
  int order() const override { return 1; }
  Vector residual(const Vector& u, double a) const override {
    return Vector::Constant(1, u[0] * u[0] + a * a - 1.0);
  }
  Matrix jacobian_u(const Vector& u, double) const override {
    return Matrix::Constant(1, 1, 2.0 * u[0]);
  }
  Vector jacobian_alpha(const Vector&, double a) const override {
    return Vector::Constant(1, 2.0 * a);
  }
};

/// G(u, alpha) = alpha*u - u^3: pitchfork at alpha = 0 on the trivial branch.
struct PitchforkProblem : ContinuationProblem {
  int order() const override { return 1; }
  Vector residual(const Vector& u, double a) const override {
    return Vector::Constant(1, a * u[0] - u[0] * u[0] * u[0]);
  }
  Matrix jacobian_u(const Vector& u, double a) const override {
    return Matrix::Constant(1, 1, a - 3.0 * u[0] * u[0]);
  }
  Vector jacobian_alpha(const Vector& u, double) const override {
    return Vector::Constant(1, u[0]);
  }
};

/// The space-free Brusselator kinetics: steady state (a, b/a) for every b,
/// losing stability through a complex pair at b = 1 + a^2.
struct KineticsProblem : ContinuationProblem {
  double a = 4.0;
  int order() const override { return 2; }
  Vector residual(const Vector& u, double b) const override {
    Vector g(2);
    g[0] = a - (b + 1.0) * u[0] + u[0] * u[0] * u[1];
    g[1] = b * u[0] - u[0] * u[0] * u[1];
    return g;
  }
  Matrix jacobian_u(const Vector& u, double b) const override {
    Matrix j(2, 2);
    j(0, 0) = -(b + 1.0) + 2.0 * u[0] * u[1];
    j(0, 1) = u[0] * u[0];
    j(1, 0) = b - 2.0 * u[0] * u[1];
    j(1, 1) = -u[0] * u[0];
    return j;
  }
  Vector jacobian_alpha(const Vector& u, double) const override {
    Vector g(2);
    g[0] = -u[0];
    g[1] = u[0];
    return g;
  }
};

ContinuationSettings settings(double lo, double hi) {
  ContinuationSettings s;
  s.alpha_lo = lo;
  s.alpha_hi = hi;
  return s;
}

} // namespace

TEST_CASE("init_branch: exact starts and tangent orientation") {
  SUBCASE("scalar line") {
    const LineProblem p;
    const BranchPoint b = init_branch(p, Vector::Zero(1), 0.0, settings(0.0, 1.0));
    CHECK(b.u[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(b.tangent[0] == doctest::Approx(M_SQRT1_2).epsilon(1e-10));
    CHECK(b.tangent[1] == doctest::Approx(M_SQRT1_2).epsilon(1e-10));
    CHECK(b.tangent.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("Gelfand problem starts at the exact zero solution") {
    const CatalogEntry e = make_catalog_entry("bratu_1d");
    const NodeSet nodes = generate_uniform_nodes(1, 10);
    const auto sys = build_system(e.problem, nodes, shape_params(nodes));
    const BranchPoint b = init_branch(sys, Vector::Zero(sys.N), 0.0, settings(0.0, 4.0));
    CHECK(b.u.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(b.tangent[sys.N] > 0.0); // oriented toward increasing lambda
    CHECK(b.newton_iters <= 1);
  }

  SUBCASE("Brusselator constant state is steady for every b") {
    const CatalogEntry e = make_catalog_entry("brusselator_1d");
    const NodeSet nodes = generate_uniform_nodes(1, 9);
    const auto sys = build_system(e.problem, nodes, shape_params(nodes));
    for (double b : {2.0, 10.0, 31.4}) {
      const Vector u0 = e.initial_state(b, nodes);
      CHECK(sys.residual(u0, b).cwiseAbs().maxCoeff() <= 1e-9);
      const BranchPoint pt = init_branch(sys, u0, b, settings(0.0, 60.0));
      CHECK((pt.u - u0).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }

  SUBCASE("divergent start throws") {
    const CatalogEntry e = make_catalog_entry("bratu_1d");
    const NodeSet nodes = generate_uniform_nodes(1, 10);
    const auto sys = build_system(e.problem, nodes, shape_params(nodes));
    // beyond the fold there is no solution to converge to
    CHECK_THROWS_AS(init_branch(sys, Vector::Zero(sys.N), 5.0, settings(0.0, 6.0)),
                    InitializationError);
  }
}

TEST_CASE("corrector: exactness and fold passage") {
  SUBCASE("linear branch converges in one iteration") {
    const LineProblem p;
    const ContinuationSettings s = settings(0.0, 10.0);
    const BranchPoint base = init_branch(p, Vector::Zero(1), 0.0, s);
    const auto res = corrector(p, base.u, base.alpha, base.tangent, 0.5, s);
    REQUIRE(res.has_value());
    CHECK(res->iters <= 1);
    CHECK(res->u[0] == doctest::Approx(res->alpha).epsilon(1e-12));
  }

  SUBCASE("circle: lands on the curve and passes the fold") {
    const CircleProblem p;
    const ContinuationSettings s = settings(-2.0, 2.0);
    BranchPoint pt = init_branch(p, Vector::Ones(1), 0.0, s);
    double prev_alpha = pt.alpha;
    bool alpha_decreased_after_fold = false;
    for (int k = 0; k < 40; ++k) {
      const auto res = corrector(p, pt.u, pt.alpha, pt.tangent, 0.1, s);
      REQUIRE(res.has_value());
      const double on_circle = res->u[0] * res->u[0] + res->alpha * res->alpha - 1.0;
      CHECK(std::abs(on_circle) <= 1e-10);
      pt = analyze_point(p, res->u, res->alpha, pt.tangent, res->iters);
      if (pt.alpha < prev_alpha) alpha_decreased_after_fold = true;
      prev_alpha = pt.alpha;
    }
    CHECK(alpha_decreased_after_fold); // went around u = 0 without stalling
  }

  SUBCASE("Gelfand first step is cheap") {
    const CatalogEntry e = make_catalog_entry("bratu_1d");
    const NodeSet nodes = generate_uniform_nodes(1, 10);
    const auto sys = build_system(e.problem, nodes, shape_params(nodes));
    const ContinuationSettings s = settings(0.0, 4.0);
    const BranchPoint base = init_branch(sys, Vector::Zero(sys.N), 0.0, s);
    const auto res = corrector(sys, base.u, base.alpha, base.tangent, 0.05, s);
    REQUIRE(res.has_value());
    CHECK(res->iters <= 4);
  }
}

TEST_CASE("test functions flag the right structures") {
  SUBCASE("fold test changes sign across the top of the circle") {
    const CircleProblem p;
    const ContinuationSettings s = settings(-2.0, 2.0);
    BranchPoint pt = init_branch(p, Vector::Ones(1), 0.0, s);
    double prev = test_fold(pt);
    bool sign_change = false;
    for (int k = 0; k < 15 && !sign_change; ++k) {
      const auto res = corrector(p, pt.u, pt.alpha, pt.tangent, 0.2, s);
      REQUIRE(res.has_value());
      pt = analyze_point(p, res->u, res->alpha, pt.tangent, res->iters);
      const double now = test_fold(pt);
      if (prev * now < 0.0) {
        sign_change = true;
        CHECK(std::abs(pt.u[0]) < 0.3); // near u = 0
      }
      prev = now;
    }
    CHECK(sign_change);
  }

  SUBCASE("branch test changes sign at the pitchfork, fold test does not") {
    const PitchforkProblem p;
    const ContinuationSettings s = settings(-1.0, 1.0);
    BranchPoint pt = init_branch(p, Vector::Zero(1), -1.0, s);
    const double log_ref = pt.log_abs_det;
    double prev_b = test_branch(pt, log_ref);
    double prev_f = test_fold(pt);
    bool branch_flip = false, fold_flip = false;
    double flip_alpha = 0.0;
    for (int k = 0; k < 30; ++k) {
      const auto res = corrector(p, pt.u, pt.alpha, pt.tangent, 0.1, s);
      REQUIRE(res.has_value());
      pt = analyze_point(p, res->u, res->alpha, pt.tangent, res->iters);
      const double nb = test_branch(pt, log_ref);
      const double nf = test_fold(pt);
      if (prev_b * nb < 0.0 && !branch_flip) {
        branch_flip = true;
        flip_alpha = pt.alpha;
      }
      if (prev_f * nf < 0.0) fold_flip = true;
      prev_b = nb;
      prev_f = nf;
      if (pt.alpha > 0.5) break;
    }
    CHECK(branch_flip);
    CHECK(std::abs(flip_alpha) < 0.15);
    CHECK_FALSE(fold_flip);
  }

  SUBCASE("hopf test crosses zero at b = 1 + a^2 with nonreal pair") {
    const KineticsProblem p;
    const ContinuationSettings s = settings(10.0, 25.0);
    Vector u0(2);
    u0 << 4.0, 10.0 / 4.0;
    BranchPoint pt = init_branch(p, u0, 10.0, s);
    double prev = test_hopf(pt);
    CHECK(prev < 0.0); // stable side: pair with negative real part
    bool crossed = false;
    for (int k = 0; k < 60 && !crossed; ++k) {
      const auto res = corrector(p, pt.u, pt.alpha, pt.tangent, 0.25, s);
      REQUIRE(res.has_value());
      pt = analyze_point(p, res->u, res->alpha, pt.tangent, res->iters);
      const double now = test_hopf(pt);
      if (prev * now < 0.0) {
        crossed = true;
        CHECK(pt.alpha == doctest::Approx(17.0).epsilon(0.05));
        CHECK(std::abs(pt.eigenvalues[0].imag()) > 1.0); // purely complex crossing
      }
      prev = now;
    }
    CHECK(crossed);
  }
}

TEST_CASE("run_continuation on the toy problems") {
  SUBCASE("circle: full revolutions, two folds per lap, refined to 1e-8") {
    const CircleProblem p;
    ContinuationSettings s = settings(-2.0, 2.0);
    s.ds_initial = 0.05;
    s.max_steps = 200;
    const ContinuationResult r = run_continuation(p, Vector::Ones(1), 0.0, s);
    CHECK(r.status == RunStatus::reached_max_steps); // alpha never exits [-2,2]

    // at least one full revolution: accumulated turning angle over 2 pi
    double angle = 0.0;
    for (size_t k = 1; k < r.branch.size(); ++k) {
      const double a0 = std::atan2(r.branch[k - 1].alpha, r.branch[k - 1].u[0]);
      const double a1 = std::atan2(r.branch[k].alpha, r.branch[k].u[0]);
      double d = a1 - a0;
      while (d > M_PI) d -= 2.0 * M_PI;
      while (d < -M_PI) d += 2.0 * M_PI;
      angle += d;
    }
    CHECK(std::abs(angle) > 2.0 * M_PI);

    REQUIRE(r.events.size() >= 2);
    for (const Event& e : r.events) {
      CHECK(e.kind == EventKind::fold);
      CHECK(std::abs(std::abs(e.alpha) - 1.0) <= 1e-7);
      CHECK(e.bracket_width <= 1e-8);
      CHECK(e.test_left * e.test_right < 0.0);
    }
    CHECK(r.events[0].alpha == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.events[1].alpha == doctest::Approx(-1.0).epsilon(1e-6));
  }

  SUBCASE("pitchfork: one branch event at alpha = 0, no fold") {
    const PitchforkProblem p;
    ContinuationSettings s = settings(-1.0, 1.0);
    const ContinuationResult r = run_continuation(p, Vector::Zero(1), -1.0, s);
    CHECK(r.status == RunStatus::ok);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == EventKind::branch);
    CHECK(std::abs(r.events[0].alpha) <= 1e-7);
  }

  SUBCASE("kinetics: one hopf event at 17 with certified nonreal pair") {
    const KineticsProblem p;
    ContinuationSettings s = settings(10.0, 25.0);
    Vector u0(2);
    u0 << 4.0, 2.5;
    const ContinuationResult r = run_continuation(p, u0, 10.0, s);
    CHECK(r.status == RunStatus::ok);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == EventKind::hopf);
    CHECK(r.events[0].alpha == doctest::Approx(17.0).epsilon(1e-6));
    CHECK(std::abs(r.events[0].im) > 1e-6);
    CHECK(std::abs(r.events[0].re) <= 1e-6);
  }

  SUBCASE("window exit terminates cleanly") {
    const LineProblem p;
    const ContinuationResult r = run_continuation(p, Vector::Zero(1), 0.0,
                                                  settings(0.0, 1.0));
    CHECK(r.status == RunStatus::ok);
    CHECK(r.branch.back().alpha >= 1.0 - 1e-9);
    CHECK(r.events.empty());
  }
}

TEST_CASE("branch invariants on a Gelfand run") {
  const CatalogEntry e = make_catalog_entry("bratu_1d");
  const NodeSet nodes = generate_uniform_nodes(1, 10);
  const auto sys = build_system(e.problem, nodes, shape_params(nodes));
  ContinuationSettings s = settings(0.0, 4.0);
  s.max_steps = 400;
  const ContinuationResult r = run_continuation(sys, Vector::Zero(sys.N), 0.0, s);

  // exactly one fold, near the classical value (sharp comparisons live in the
  // acceptance suite; this is the smoke-level check)
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].kind == EventKind::fold);
  CHECK(r.events[0].alpha == doctest::Approx(3.5138).epsilon(2e-3));

  for (size_t k = 0; k < r.branch.size(); ++k) {
    const BranchPoint& p = r.branch[k];
    CHECK(p.tangent.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sys.residual(p.u, p.alpha).cwiseAbs().maxCoeff() <= 10 * s.newton_tol);
    if (k > 0) CHECK(p.tangent.dot(r.branch[k - 1].tangent) > 0.0);
  }
}

TEST_CASE("determinism: identical runs produce identical results") {
  const CircleProblem p;
  ContinuationSettings s = settings(-2.0, 2.0);
  s.max_steps = 120;
  const ContinuationResult r1 = run_continuation(p, Vector::Ones(1), 0.0, s);
  const ContinuationResult r2 = run_continuation(p, Vector::Ones(1), 0.0, s);
  REQUIRE(r1.branch.size() == r2.branch.size());
  REQUIRE(r1.events.size() == r2.events.size());
  for (size_t k = 0; k < r1.branch.size(); ++k) {
    CHECK(r1.branch[k].alpha == r2.branch[k].alpha);
    CHECK(r1.branch[k].u[0] == r2.branch[k].u[0]);
  }
  for (size_t k = 0; k < r1.events.size(); ++k)
    CHECK(r1.events[k].alpha == r2.events[k].alpha);
}
