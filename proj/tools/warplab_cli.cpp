#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "warplab/suites.hpp"

using namespace warplab;

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

int run(const std::string& suite, const CliArgs& args) {
  std::ifstream is(args.config_path);
  if (!is) {
    std::cerr << "config: cannot open '" << args.config_path << "'\n";
    return 2;
  }
  Json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    std::cerr << "config: invalid JSON: " << e.what() << "\n";
    return 2;
  }
  j["suite"] = suite;
  if (args.seed) j["seed"] = *args.seed;
  ExperimentConfig cfg;
  try {
    cfg = parse_config(j);
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }
  std::filesystem::path out = args.out_dir.empty() ? cfg.out : args.out_dir;
  try {
    int code = run_experiment(cfg, out);
    std::cout << "suite " << suite << (code == 0 ? " passed" : " FAILED")
              << "; report at " << (out / "report.json").string() << "\n";
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warplab: numerical laboratory for spacelike graphs in "
               "Lorentzian warped products"};
  app.set_version_flag("--version", std::string("report schema ") +
                                        report_schema_version());
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> suites = {
      {"verify-identities", "discrete vs closed-form identity residuals"},
      {"capacity", "condenser capacity of a metric annulus"},
      {"parabolic-trend", "capacity decay diagnostic over growing radii"},
      {"solve", "prescribed-curvature solve under the ellipticity margin"},
      {"sweep", "solves across a grid of target curvatures"},
      {"full-report", "identities, certificates and bounds in one run"}};

  std::map<std::string, CliArgs> args;
  for (auto& [name, desc] : suites) {
    auto* sub = app.add_subcommand(name, desc);
    auto& a = args[name];
    sub->add_option("--config", a.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", a.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", a.seed, "seed override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion" ? 0 : 2;
  }
  for (auto& [name, desc] : suites)
    if (app.got_subcommand(name)) return run(name, args[name]);
  return 2;
}
