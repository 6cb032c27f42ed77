#include "mqcont/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mqcont/catalog.hpp"
#include "mqcont/textio.hpp"

namespace mqcont {

namespace {

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
}

void parse_detect(const std::string& value, ContinuationSettings& s, int line_no) {
  s.detect_fold = s.detect_branch = s.detect_hopf = false;
  if (value == "none") return;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string name{trim(item)};
    if (name == "fold")
      s.detect_fold = true;
    else if (name == "branch")
      s.detect_branch = true;
    else if (name == "hopf")
      s.detect_hopf = true;
    else
      fail(line_no, "cont.detect entries must be fold, branch or hopf; got '" + name + "'");
  }
}

} // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.params.clear();
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    if (key.empty()) fail(line_no, "empty key");
    if (value.empty()) fail(line_no, "empty value for '" + key + "'");
    if (!seen.insert(key).second) fail(line_no, "duplicate key '" + key + "'");

    try {
      if (key == "problem.id") {
        cfg.problem_id = value;
      } else if (key.rfind("problem.", 0) == 0) {
        cfg.params[key.substr(8)] = parse_double(value);
      } else if (key == "disc.ns") {
        cfg.disc.ns = parse_int(value);
      } else if (key == "disc.distribution") {
        cfg.disc.distribution = value;
      } else if (key == "disc.h1") {
        cfg.disc.h1 = parse_double(value);
      } else if (key == "disc.s") {
        cfg.disc.s = parse_double(value);
      } else if (key == "mode") {
        cfg.mode = value;
      } else if (key == "cont.alpha_lo") {
        cfg.cont.alpha_lo = parse_double(value);
      } else if (key == "cont.alpha_hi") {
        cfg.cont.alpha_hi = parse_double(value);
      } else if (key == "cont.ds_initial") {
        cfg.cont.ds_initial = parse_double(value);
      } else if (key == "cont.ds_min") {
        cfg.cont.ds_min = parse_double(value);
      } else if (key == "cont.ds_max") {
        cfg.cont.ds_max = parse_double(value);
      } else if (key == "cont.newton_tol") {
        cfg.cont.newton_tol = parse_double(value);
      } else if (key == "cont.newton_max_iter") {
        cfg.cont.newton_max_iter = parse_int(value);
      } else if (key == "cont.event_tol_alpha") {
        cfg.cont.event_tol_alpha = parse_double(value);
      } else if (key == "cont.max_steps") {
        cfg.cont.max_steps = parse_int(value);
      } else if (key == "cont.detect") {
        parse_detect(value, cfg.cont, line_no);
      } else if (key == "eigen.count") {
        cfg.eigen_count = parse_int(value);
      } else if (key == "out.branch_csv") {
        cfg.out.branch_csv = value;
      } else if (key == "out.events_csv") {
        cfg.out.events_csv = value;
      } else if (key == "out.report") {
        cfg.out.report = value;
      } else {
        fail(line_no, "unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      fail(line_no, std::string(e.what()) + " in '" + key + "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "problem.id = " << cfg.problem_id << "\n";
  for (const auto& [name, value] : cfg.params)
    out << "problem." << name << " = " << format_double(value) << "\n";
  out << "disc.ns = " << cfg.disc.ns << "\n";
  out << "disc.distribution = " << cfg.disc.distribution << "\n";
  out << "disc.h1 = " << format_double(cfg.disc.h1) << "\n";
  out << "disc.s = " << format_double(cfg.disc.s) << "\n";
  out << "mode = " << cfg.mode << "\n";
  out << "cont.alpha_lo = " << format_double(cfg.cont.alpha_lo) << "\n";
  out << "cont.alpha_hi = " << format_double(cfg.cont.alpha_hi) << "\n";
  out << "cont.ds_initial = " << format_double(cfg.cont.ds_initial) << "\n";
  out << "cont.ds_min = " << format_double(cfg.cont.ds_min) << "\n";
  out << "cont.ds_max = " << format_double(cfg.cont.ds_max) << "\n";
  out << "cont.newton_tol = " << format_double(cfg.cont.newton_tol) << "\n";
  out << "cont.newton_max_iter = " << cfg.cont.newton_max_iter << "\n";
  out << "cont.event_tol_alpha = " << format_double(cfg.cont.event_tol_alpha) << "\n";
  out << "cont.max_steps = " << cfg.cont.max_steps << "\n";
  std::string detect;
  if (cfg.cont.detect_fold) detect += "fold";
  if (cfg.cont.detect_branch) detect += detect.empty() ? "branch" : ",branch";
  if (cfg.cont.detect_hopf) detect += detect.empty() ? "hopf" : ",hopf";
  out << "cont.detect = " << (detect.empty() ? "none" : detect) << "\n";
  out << "eigen.count = " << cfg.eigen_count << "\n";
  out << "out.branch_csv = " << cfg.out.branch_csv << "\n";
  out << "out.events_csv = " << cfg.out.events_csv << "\n";
  out << "out.report = " << cfg.out.report << "\n";
  return out.str();
}

void validate_config(const RunConfig& cfg) {
  const auto ids = catalog_ids();
  if (std::find(ids.begin(), ids.end(), cfg.problem_id) == ids.end())
    throw ConfigError("unknown problem.id '" + cfg.problem_id + "'");
  try {
    make_catalog_entry(cfg.problem_id, cfg.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.disc.distribution != "uniform" && cfg.disc.distribution != "adapted")
    throw ConfigError("disc.distribution must be uniform or adapted, got '" +
                      cfg.disc.distribution + "'");
  if (cfg.disc.ns < 2) throw ConfigError("disc.ns must be >= 2");
  if (cfg.disc.distribution == "adapted" && cfg.disc.ns < 3)
    throw ConfigError("disc.ns must be >= 3 for adapted nodes");
  if (cfg.disc.distribution == "adapted" && (cfg.disc.h1 < 0.1 || cfg.disc.h1 > 0.5))
    throw ConfigError("disc.h1 must lie in [0.1, 0.5]");
  if (cfg.disc.s < 4.0 || cfg.disc.s > 12.0)
    throw ConfigError("disc.s must lie in [4, 12]");
  if (cfg.mode != "eigen" && cfg.mode != "continue" && cfg.mode != "table")
    throw ConfigError("mode must be eigen, continue or table, got '" + cfg.mode + "'");
  if (!(cfg.cont.alpha_hi > cfg.cont.alpha_lo))
    throw ConfigError("cont.alpha_hi must exceed cont.alpha_lo");
  if (cfg.cont.ds_initial < 0.0 || cfg.cont.ds_min <= 0.0 || cfg.cont.ds_max < 0.0)
    throw ConfigError("step sizes must be positive (0 selects the default)");
  if (cfg.cont.newton_tol <= 0.0) throw ConfigError("cont.newton_tol must be positive");
  if (cfg.cont.newton_max_iter < 1) throw ConfigError("cont.newton_max_iter must be >= 1");
  if (cfg.cont.event_tol_alpha <= 0.0)
    throw ConfigError("cont.event_tol_alpha must be positive");
  if (cfg.cont.max_steps < 1) throw ConfigError("cont.max_steps must be >= 1");
  if (cfg.eigen_count < 1) throw ConfigError("eigen.count must be >= 1");
  if (cfg.out.branch_csv.empty() || cfg.out.events_csv.empty() || cfg.out.report.empty())
    throw ConfigError("output file names must be non-empty");
}

} // namespace mqcont
