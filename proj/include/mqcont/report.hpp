#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mqcont/config.hpp"
#include "mqcont/continuation.hpp"

namespace mqcont {

/// Everything one configured run produced: the numerical results plus the
/// exact bytes written to the three output files.  exit_code is 0 on success
/// and 3 after a numerical failure; partial outputs are written either way.
struct RunArtifacts {
  RunConfig config;
  double gamma_cond = 0.0;
  std::vector<std::string> warnings;
  ContinuationResult cont;          ///< continue mode (empty otherwise)
  ComplexVector eigenvalues;        ///< eigen mode, ascending real part
  std::string branch_csv;
  std::string events_csv;
  std::string report_text;
  double wall_seconds = 0.0;
  int exit_code = 0;
};

/// Executes one run and writes the branch CSV, event CSV and human-readable
/// report into out_dir (created if missing).  verify_jacobians cross-checks
/// the analytic Jacobians against finite differences at every accepted point
/// and reports the worst relative deviation.  Config errors throw
/// ConfigError; numerical failures are captured in the artifacts instead.
RunArtifacts run(const RunConfig& cfg, const std::filesystem::path& out_dir,
                 bool verify_jacobians = false);

/// Outcome of one reproduction case: measured-vs-target lines and the
/// verdict.  A case passes when every numeric check holds and the wall time
/// stays inside the budget.
struct CriterionResult {
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<std::string> details;

  /// "PASS name (1.2 s)" plus indented detail lines.
  std::string summary() const;
};

struct ReproReport {
  std::vector<CriterionResult> results;
  bool all_pass = true;
  std::string text;                 ///< aggregate report, also written to disk
};

/// Case names accepted by reproduce_all's filter, in execution order.
std::vector<std::string> repro_names();

/// Runs the reproduction suite (or the single named case) with the committed
/// presets, writing per-case artifacts under out_dir/<name>/ and an aggregate
/// report at out_dir/repro_report.txt.  Unknown names throw
/// std::invalid_argument.
ReproReport reproduce_all(const std::filesystem::path& out_dir,
                          const std::string& only = "");

}  // namespace mqcont
