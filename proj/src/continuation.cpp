#include "mqcont/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mqcont {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Matrix bordered_matrix(const Matrix& ju, const Vector& ja, const Vector& tangent) {
  const Eigen::Index m = ju.rows();
  Matrix bord(m + 1, m + 1);
  bord.topLeftCorner(m, m) = ju;
  bord.topRightCorner(m, 1) = ja;
  bord.bottomRows(1) = tangent.transpose();
  return bord;
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

} // namespace

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::fold: return "fold";
    case EventKind::branch: return "branch";
    case EventKind::hopf: return "hopf";
  }
  return "?";
}

NewtonResult newton_fixed_alpha(const ContinuationProblem& prob, Vector u0, double alpha,
                                double tol, int max_iter) {
  NewtonResult res;
  res.u = std::move(u0);
  for (int it = 0; it <= max_iter; ++it) {
    const Vector g = prob.residual(res.u, alpha);
    if (!g.allFinite()) return res;
    if (g.cwiseAbs().maxCoeff() <= tol) {
      res.converged = true;
      res.iters = it;
      return res;
    }
    if (it == max_iter) break;
    const auto lu = linalg::lu_factor(prob.jacobian_u(res.u, alpha));
    if (lu.singular) return res;
    res.u -= lu.solve(g);
    res.iters = it + 1;
  }
  return res;
}

std::optional<CorrectorResult> corrector(const ContinuationProblem& prob,
                                         const Vector& u_base, double alpha_base,
                                         const Vector& tangent, double ds,
                                         const ContinuationSettings& s) {
  const int m = prob.order();
  Vector u = u_base + ds * tangent.head(m);
  double alpha = alpha_base + ds * tangent[m];

  double r0 = -1.0;  // residual scale from the predictor, for the growth guard
  for (int it = 0; it <= s.newton_max_iter; ++it) {
    const Vector g = prob.residual(u, alpha);
    if (!g.allFinite()) return std::nullopt;
    const double gnorm = g.cwiseAbs().maxCoeff();
    const double constraint =
        tangent.head(m).dot(u - u_base) + tangent[m] * (alpha - alpha_base) - ds;
    if (gnorm <= s.newton_tol && std::abs(constraint) <= s.newton_tol * (1.0 + std::abs(ds)))
      return CorrectorResult{u, alpha, it};
    if (r0 < 0.0) r0 = gnorm;
    if (gnorm > 4.0 * std::max(r0, s.newton_tol)) return std::nullopt;
    if (it == s.newton_max_iter) break;

    const Matrix bord =
        bordered_matrix(prob.jacobian_u(u, alpha), prob.jacobian_alpha(u, alpha), tangent);
    const auto lu = linalg::lu_factor(bord);
    if (lu.singular) return std::nullopt;
    Vector rhs(m + 1);
    rhs.head(m) = g;
    rhs[m] = constraint;
    const Vector step = lu.solve(rhs);
    if (!step.allFinite()) return std::nullopt;
    u -= step.head(m);
    alpha -= step[m];
  }
  return std::nullopt;
}

BranchPoint analyze_point(const ContinuationProblem& prob, Vector u, double alpha,
                          const Vector& prev_tangent, int newton_iters) {
  const int m = prob.order();
  BranchPoint p;
  p.u = std::move(u);
  p.alpha = alpha;
  p.newton_iters = newton_iters;
  p.norm2 = p.u.norm();
  p.norm_inf = p.u.size() ? p.u.cwiseAbs().maxCoeff() : 0.0;

  const Matrix ju = prob.jacobian_u(p.u, alpha);
  const Vector ja = prob.jacobian_alpha(p.u, alpha);

  // New tangent from the bordered system with the previous tangent as the
  // closing row; the solution has positive inner product with it by
  // construction, so orientation carries over.
  const auto lu_prev = linalg::lu_factor(bordered_matrix(ju, ja, prev_tangent));
  if (!lu_prev.singular) {
    Vector rhs = Vector::Zero(m + 1);
    rhs[m] = 1.0;
    Vector t = lu_prev.solve(rhs);
    t /= t.norm();
    p.tangent = t;
  } else {
    p.tangent = prev_tangent;  // exactly singular bordered matrix: keep direction
  }

  const auto lu_self = linalg::lu_factor(bordered_matrix(ju, ja, p.tangent));
  p.det_sign = lu_self.det_sign;
  p.log_abs_det = lu_self.log_abs_det;

  const auto spec = linalg::eigen_full(ju);
  p.eigenvalues = spec.eigenvalues;
  p.n_unstable = 0;
  double best = std::numeric_limits<double>::infinity();
  double best_re = 0.0;
  for (Eigen::Index i = 0; i < p.eigenvalues.size(); ++i) {
    const auto ev = p.eigenvalues[i];
    if (ev.real() > 0.0) ++p.n_unstable;
    if (std::abs(ev.imag()) > 1e-6 && std::abs(ev.real()) < best) {
      best = std::abs(ev.real());
      best_re = ev.real();
    }
  }
  p.hopf_test = std::isinf(best) ? kNan : (best_re >= 0.0 ? best : -best);
  return p;
}

BranchPoint init_branch(const ContinuationProblem& prob, const Vector& u0, double alpha0,
                        const ContinuationSettings& s) {
  const auto nr = newton_fixed_alpha(prob, u0, alpha0, s.newton_tol, s.newton_max_iter);
  if (!nr.converged)
    throw InitializationError("initialization failed: Newton did not converge at alpha0");
  // Closing the bordered system with the unit alpha direction orients the
  // first tangent toward increasing alpha.
  Vector e_alpha = Vector::Zero(prob.order() + 1);
  e_alpha[prob.order()] = 1.0;
  return analyze_point(prob, nr.u, alpha0, e_alpha, nr.iters);
}

double test_fold(const BranchPoint& p) { return p.tangent[p.tangent.size() - 1]; }

double test_branch(const BranchPoint& p, double log_ref) {
  if (p.det_sign == 0) return 0.0;
  return p.det_sign * std::max(std::exp(p.log_abs_det - log_ref), 1e-300);
}

double test_hopf(const BranchPoint& p) { return p.hopf_test; }

namespace {

double test_value(const BranchPoint& p, EventKind kind, double log_ref) {
  switch (kind) {
    case EventKind::fold: return test_fold(p);
    case EventKind::branch: return test_branch(p, log_ref);
    case EventKind::hopf: return test_hopf(p);
  }
  return kNan;
}

} // namespace

LocateResult locate_event(const ContinuationProblem& prob, const BranchPoint& left,
                          const BranchPoint& right, double ds, EventKind kind,
                          const ContinuationSettings& s) {
  LocateResult out;

  double log_ref = std::max(left.log_abs_det, right.log_abs_det);
  double sl = 0.0, sr = ds;
  double al = left.alpha, ar = right.alpha;
  double tl = test_value(left, kind, log_ref);
  double tr = test_value(right, kind, log_ref);
  if (std::isnan(tl) || std::isnan(tr) || sign_of(tl) * sign_of(tr) >= 0) {
    out.message = "locate_event: endpoints do not bracket a sign change";
    out.discard = true;
    return out;
  }

  BranchPoint trial = right;
  bool have_trial = false;
  int last_moved = 0;  // Illinois bookkeeping: which side moved last

  for (int it = 0; it < 60; ++it) {
    if (std::abs(ar - al) <= s.event_tol_alpha && have_trial) {
      out.converged = true;
      break;
    }

    // Illinois-damped regula falsi with a bisection safeguard.
    double wl = tl, wr = tr;
    if (last_moved == 1) wl *= 0.5;
    if (last_moved == -1) wr *= 0.5;
    double sm = (sl * wr - sr * wl) / (wr - wl);
    const double width = sr - sl;
    if (!(sm > sl + 1e-3 * width && sm < sr - 1e-3 * width)) sm = 0.5 * (sl + sr);

    auto cr = corrector(prob, left.u, left.alpha, left.tangent, sm, s);
    if (!cr) {
      // fall back to the midpoint of the wider half before giving up
      sm = 0.5 * (sl + sr);
      cr = corrector(prob, left.u, left.alpha, left.tangent, sm, s);
      if (!cr) {
        out.message = "event refinement stalled: corrector failed inside bracket";
        break;
      }
    }
    trial = analyze_point(prob, cr->u, cr->alpha, left.tangent, cr->iters);
    have_trial = true;
    if (kind == EventKind::branch)
      log_ref = std::max({left.log_abs_det, right.log_abs_det, trial.log_abs_det});
    const double tm = test_value(trial, kind, log_ref);
    if (std::isnan(tm)) {
      out.message = "event refinement stalled: test function undefined at trial point";
      break;
    }
    if (sign_of(tm) == 0 || sign_of(tm) == sign_of(tr)) {
      sr = sm;
      ar = trial.alpha;
      tr = tm;
      last_moved = 1;
    } else {
      sl = sm;
      al = trial.alpha;
      tl = tm;
      last_moved = -1;
    }
    if (sign_of(tm) == 0) {
      out.converged = true;
      break;
    }
  }

  if (!have_trial) {
    // no usable trial point: nothing sensible to report as an event
    out.discard = true;
    out.message = out.message.empty() ? "event refinement stalled" : out.message;
    return out;
  }

  Event ev;
  ev.kind = kind;
  ev.alpha = trial.alpha;
  ev.u = trial.u;
  ev.bracket_width = std::abs(ar - al);
  ev.test_left = tl;
  ev.test_right = tr;

  if (kind == EventKind::hopf) {
    // Certify the crossing pair: nearly purely imaginary, with a persistent
    // imaginary part.  A failed certificate means the sign change came from a
    // switch of the closest pair, not from a crossing.
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < trial.eigenvalues.size(); ++i) {
      const auto evp = trial.eigenvalues[i];
      if (std::abs(evp.imag()) > 1e-6 && std::abs(evp.real()) < best) {
        best = std::abs(evp.real());
        ev.re = evp.real();
        ev.im = std::abs(evp.imag());
      }
    }
    const Matrix ju = prob.jacobian_u(trial.u, trial.alpha);
    const double scale = ju.cwiseAbs().maxCoeff();
    if (!(std::abs(ev.re) <= 1e-6 * scale && std::abs(ev.im) > 1e-6)) {
      out.discard = true;
      out.message = "hopf certificate failed (pair switch, not a crossing)";
      out.event = ev;
      return out;
    }
  }

  out.event = ev;
  if (!out.converged && out.message.empty())
    out.message = "event refinement stalled: iteration budget exhausted";
  return out;
}

ContinuationResult run_continuation(const ContinuationProblem& prob, const Vector& u0,
                                    double alpha0, const ContinuationSettings& s) {
  ContinuationResult res;
  res.branch.push_back(init_branch(prob, u0, alpha0, s));

  double ds = s.effective_ds_initial();
  const double ds_max = s.effective_ds_max();
  int quick_successes = 0;

  auto note = [&res](const std::string& msg) {
    if (!res.message.empty()) res.message += "; ";
    res.message += msg;
  };

  for (int step = 0; step < s.max_steps; ++step) {
    const BranchPoint& prev = res.branch.back();
    const auto cr = corrector(prob, prev.u, prev.alpha, prev.tangent, ds, s);
    if (!cr) {
      ds *= 0.5;
      quick_successes = 0;
      if (ds < s.ds_min) {
        res.status = RunStatus::step_failure;
        note("step failure: ds underflow at alpha = " + std::to_string(prev.alpha));
        return res;
      }
      continue;
    }

    BranchPoint next = analyze_point(prob, cr->u, cr->alpha, prev.tangent, cr->iters);

    // --- event scan over this interval ---
    struct Candidate {
      EventKind kind;
      LocateResult loc;
    };
    std::vector<Candidate> cands;
    const double log_ref = std::max(prev.log_abs_det, next.log_abs_det);
    auto scan = [&](EventKind kind, bool enabled) {
      if (!enabled) return;
      const double a = test_value(prev, kind, log_ref);
      const double b = test_value(next, kind, log_ref);
      if (std::isnan(a) || std::isnan(b)) return;
      if (sign_of(a) * sign_of(b) < 0)
        cands.push_back({kind, locate_event(prob, prev, next, ds, kind, s)});
    };
    scan(EventKind::fold, s.detect_fold);
    scan(EventKind::branch, s.detect_branch);
    scan(EventKind::hopf, s.detect_hopf);

    // A bordered-determinant sign change at the same location as a tangent
    // sign change is the fold itself, not a separate branch point.
    const Candidate* fold_cand = nullptr;
    for (const auto& c : cands)
      if (c.kind == EventKind::fold && !c.loc.discard) fold_cand = &c;
    std::vector<const Candidate*> keep;
    for (const auto& c : cands) {
      if (c.loc.discard) {
        if (!c.loc.message.empty()) note(c.loc.message);
        continue;
      }
      if (c.kind == EventKind::branch && fold_cand &&
          std::abs(c.loc.event.alpha - fold_cand->loc.event.alpha) <= s.event_tol_alpha)
        continue;
      if (!c.loc.converged) note(c.loc.message);
      keep.push_back(&c);
    }
    std::stable_sort(keep.begin(), keep.end(), [&](const Candidate* a, const Candidate* b) {
      // order within the interval by position along the step direction
      const double pa = (a->loc.event.u - prev.u).dot(prev.tangent.head(prob.order())) +
                        (a->loc.event.alpha - prev.alpha) * prev.tangent[prob.order()];
      const double pb = (b->loc.event.u - prev.u).dot(prev.tangent.head(prob.order())) +
                        (b->loc.event.alpha - prev.alpha) * prev.tangent[prob.order()];
      return pa < pb;
    });
    for (const Candidate* c : keep) res.events.push_back(c->loc.event);

    res.branch.push_back(std::move(next));

    if (cr->iters <= 3) {
      if (++quick_successes >= 2) ds = std::min(ds * 1.3, ds_max);
    } else {
      quick_successes = 0;
    }

    const double a_new = res.branch.back().alpha;
    if (a_new < s.alpha_lo || a_new > s.alpha_hi) return res;  // left the window
  }
  res.status = RunStatus::reached_max_steps;
  note("stopped after max_steps");
  return res;
}

} // namespace mqcont
