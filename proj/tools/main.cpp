#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "mqcont/config.hpp"
#include "mqcont/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"multiquadric collocation and pseudo-arclength continuation runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string only;
  bool verify = false;

  CLI::App* run_cmd = app.add_subcommand("run", "execute one configured run");
  run_cmd->add_option("config", config_path, "path to a key=value config file")->required();
  run_cmd->add_option("--out-dir", out_dir, "output directory (default: out)");
  run_cmd->add_flag("--verify-jacobians", verify,
                    "cross-check analytic jacobians against finite differences at every step");

  CLI::App* repro_cmd =
      app.add_subcommand("repro", "reproduce the bundled benchmark tables with committed presets");
  repro_cmd->add_option("--only", only, "run a single named case (see repro_names)");
  repro_cmd->add_option("--out-dir", out_dir, "output directory (default: out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      const mqcont::RunConfig cfg = mqcont::load_config(config_path);
      const mqcont::RunArtifacts art = mqcont::run(cfg, out_dir, verify);
      std::cout << art.report_text;
      return art.exit_code;
    }
    const mqcont::ReproReport rr = mqcont::reproduce_all(out_dir, only);
    std::cout << rr.text;
    return rr.all_pass ? 0 : 1;
  } catch (const mqcont::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
