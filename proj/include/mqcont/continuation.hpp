#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mqcont/continuation_problem.hpp"
#include "mqcont/linalg.hpp"

namespace mqcont {

struct ContinuationSettings {
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  double ds_initial = 0.0;      ///< 0 -> 0.02 * (alpha_hi - alpha_lo)
  double ds_min = 1e-8;
  double ds_max = 0.0;          ///< 0 -> 10 * ds_initial
  double newton_tol = 1e-10;
  int newton_max_iter = 12;
  bool detect_fold = true;
  bool detect_branch = true;
  bool detect_hopf = true;
  double event_tol_alpha = 1e-8;
  int max_steps = 1000;

  double effective_ds_initial() const {
    return ds_initial > 0.0 ? ds_initial : 0.02 * std::abs(alpha_hi - alpha_lo);
  }
  double effective_ds_max() const {
    return ds_max > 0.0 ? ds_max : 10.0 * effective_ds_initial();
  }
};

/// One accepted point on a branch, with everything the event tests consume:
/// the unit tangent (alpha component last), the bordered-matrix determinant
/// sign and log magnitude, and the Jacobian spectrum.
struct BranchPoint {
  Vector u;
  double alpha = 0.0;
  Vector tangent;               ///< size order+1, oriented along the branch
  int newton_iters = 0;
  int det_sign = 0;             ///< sign det [[G_u, G_alpha], [tangent^T]]
  double log_abs_det = 0.0;
  ComplexVector eigenvalues;    ///< spectrum of G_u, descending real part
  int n_unstable = 0;           ///< eigenvalues with Re > 0
  double hopf_test = 0.0;       ///< signed min |Re| over complex pairs; NaN if none
  double norm2 = 0.0;
  double norm_inf = 0.0;
};

enum class EventKind { fold, branch, hopf };

const char* event_kind_name(EventKind k);

struct Event {
  EventKind kind = EventKind::fold;
  double alpha = 0.0;
  Vector u;
  double bracket_width = 0.0;   ///< final alpha bracket of the refinement
  double test_left = 0.0;       ///< test values certifying the sign change
  double test_right = 0.0;
  double re = 0.0, im = 0.0;    ///< crossing pair for Hopf events
};

struct LocateResult {
  bool converged = false;       ///< bracket reached event_tol_alpha
  bool discard = false;         ///< sign change failed certification (no event)
  Event event;
  std::string message;
};

enum class RunStatus { ok, reached_max_steps, step_failure };

struct ContinuationResult {
  RunStatus status = RunStatus::ok;
  std::string message;
  std::vector<BranchPoint> branch;
  std::vector<Event> events;
};

struct InitializationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NewtonResult {
  Vector u;
  int iters = 0;
  bool converged = false;
};

/// Plain Newton at fixed parameter value.
NewtonResult newton_fixed_alpha(const ContinuationProblem& prob, Vector u0, double alpha,
                                double tol, int max_iter);

struct CorrectorResult {
  Vector u;
  double alpha = 0.0;
  int iters = 0;
};

/// One pseudo-arclength corrector solve: Newton on G(z) = 0 together with the
/// plane <z - base, tangent> = ds, starting from the tangent predictor.
std::optional<CorrectorResult> corrector(const ContinuationProblem& prob,
                                         const Vector& u_base, double alpha_base,
                                         const Vector& tangent, double ds,
                                         const ContinuationSettings& s);

/// Completes a converged point: new tangent (continuous with `prev_tangent`),
/// bordered determinant data, spectrum and test values.
BranchPoint analyze_point(const ContinuationProblem& prob, Vector u, double alpha,
                          const Vector& prev_tangent, int newton_iters);

/// Converges the initial point at fixed alpha0 and orients the tangent toward
/// increasing alpha.  Throws InitializationError when Newton fails.
BranchPoint init_branch(const ContinuationProblem& prob, const Vector& u0, double alpha0,
                        const ContinuationSettings& s);

/// Test function values at a point; a sign change between consecutive points
/// flags the corresponding event.
double test_fold(const BranchPoint& p);
double test_branch(const BranchPoint& p, double log_ref);
double test_hopf(const BranchPoint& p);

/// Refines a bracketing sign change of `kind` between `left` and the point at
/// arclength `ds` along its tangent, by regula falsi on corrector-converged
/// sub-steps, until the alpha bracket shrinks below event_tol_alpha (at most
/// 60 trials; "event refinement stalled" otherwise).  Hopf candidates must
/// certify |Re| small and |Im| > 1e-6 at the located point, else `discard`.
LocateResult locate_event(const ContinuationProblem& prob, const BranchPoint& left,
                          const BranchPoint& right, double ds, EventKind kind,
                          const ContinuationSettings& s);

/// Full predictor-corrector run with step-size control and event
/// detection.  Numerical failures end the run with partial results.
ContinuationResult run_continuation(const ContinuationProblem& prob, const Vector& u0,
                                    double alpha0, const ContinuationSettings& s);

} // namespace mqcont
