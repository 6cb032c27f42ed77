#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "mqcont/continuation.hpp"

namespace mqcont {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Node distribution and shape-parameter choice for one run.
struct Discretization {
  int ns = 10;
  std::string distribution = "uniform";  ///< "uniform" | "adapted"
  double h1 = 0.25;                      ///< boundary pull-in factor (adapted only)
  double s = 6.0;                        ///< shape scale, c = s/(ns-1)
};

struct OutputNames {
  std::string branch_csv = "branch.csv";
  std::string events_csv = "events.csv";
  std::string report = "report.txt";
};

/// Full description of one deterministic run.  Parsed from flat `key = value`
/// text with dotted section keys; see parse_config for the grammar.
struct RunConfig {
  std::string problem_id = "bratu_1d";
  std::map<std::string, double> params;  ///< catalog parameter overrides
  Discretization disc;
  std::string mode = "continue";         ///< "eigen" | "continue" | "table"
  ContinuationSettings cont;
  int eigen_count = 4;                   ///< leading eigenvalues reported in eigen mode
  OutputNames out;
};

/// Parses the flat key=value grammar:
///   - one `key = value` pair per line; `#` starts a comment; blanks ignored
///   - keys: problem.id, problem.<param>, disc.{ns,distribution,h1,s}, mode,
///     cont.{alpha_lo,alpha_hi,ds_initial,ds_min,ds_max,newton_tol,
///     newton_max_iter,event_tol_alpha,max_steps,detect}, eigen.count,
///     out.{branch_csv,events_csv,report}
///   - cont.detect is a comma list drawn from fold,branch,hopf, or `none`
/// Unknown keys, malformed numbers, duplicate keys and out-of-range values
/// all throw ConfigError with the offending line.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::string& path);

/// Canonical serialization: fixed key order, shortest round-trip numbers.
/// parse_config(serialize_config(c)) reproduces c field-for-field.
std::string serialize_config(const RunConfig& cfg);

/// Range/consistency checks shared by parse_config and programmatic callers;
/// throws ConfigError naming the bad field.
void validate_config(const RunConfig& cfg);

} // namespace mqcont
