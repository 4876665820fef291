#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

#include "sphereflow.h"

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;

int exit_code(sf_status s) { return s == SF_ERR_CONFIG ? kExitConfig : kExitNumerical; }

int report(sf_status s) {
  std::fprintf(stderr, "sphereflow: %s: %s\n", sf_status_string(s), sf_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete bundle mean curvature flow, Jacobi spectra and sweep-out widths"};
  app.set_version_flag("--version", sf_version());
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "Run the scenario and write its reports");
  run->add_option("--config", config, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Output directory (defaults to the scenario's \"output\")");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");

  CLI::App* validate = app.add_subcommand("validate", "Check a scenario without running it");
  validate->add_option("--config", config, "Scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  sf_scenario* sc = nullptr;
  if (sf_status s = sf_scenario_load(config.c_str(), &sc); s != SF_OK) return report(s);

  if (*validate) {
    std::printf("valid: %s\n", sf_scenario_experiment(sc));
    sf_scenario_free(sc);
    return 0;
  }

  if (seed_opt->count() > 0) {
    if (sf_status s = sf_scenario_set_seed(sc, seed); s != SF_OK) {
      sf_scenario_free(sc);
      return report(s);
    }
  }
  if (out_dir.empty()) out_dir = sf_scenario_output(sc);
  if (out_dir.empty()) {
    sf_scenario_free(sc);
    std::fprintf(stderr, "sphereflow: configuration error: no --out given and no \"output\" in the scenario\n");
    return kExitConfig;
  }

  sf_result* result = nullptr;
  sf_status s = sf_scenario_run(sc, out_dir.c_str(), &result);
  sf_scenario_free(sc);
  if (s != SF_OK) return report(s);
  for (std::size_t i = 0; i < sf_result_num_files(result); ++i) {
    std::printf("%s/%s\n", out_dir.c_str(), sf_result_file(result, i));
  }
  sf_result_free(result);
  return 0;
}
