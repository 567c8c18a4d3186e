/**
 * @file qsfrac_main.cpp
 * @brief Command line front end.
 *
 * Subcommands:
 *   simulate  run one evolution per configured model and write trajectories
 *   ladder    run the eps ladder against the linear reference and write the
 *             convergence report
 *   oracle    cross-check the greedy minimization against brute force
 *   check     run the acceptance suite
 *
 * Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or usage.
 */
#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qsf/acceptance.hpp"
#include "qsf/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "Path to a JSON run configuration")
      ->required();
  cmd->add_option("-o,--out", args.out_dir, "Output directory (overrides outputs.dir)");
  cmd->add_option("-s,--seed", args.seed, "Override solve.rng_seed");
  cmd->add_option("-w,--workers", args.workers, "Override solve.workers");
}

qsf::RunConfig load_with_overrides(const CommonArgs& args) {
  qsf::RunConfig config = qsf::load_config(args.config_path);
  if (args.seed) config.solve.rng_seed = *args.seed;
  if (args.workers) {
    if (*args.workers < 1) throw qsf::ConfigError("--workers must be >= 1");
    config.solve.workers = *args.workers;
  }
  config.validate();
  return config;
}

void print_files(const std::vector<std::string>& files) {
  for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasistatic brittle-fracture evolution on a square grid"};
  app.require_subcommand(0, 1);

  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");

  CommonArgs sim_args, ladder_args, oracle_args;
  CLI::App* sim = app.add_subcommand("simulate", "Run evolutions and write trajectories");
  add_common(sim, sim_args);
  CLI::App* ladder = app.add_subcommand("ladder", "Run the eps ladder and write the report");
  add_common(ladder, ladder_args);
  CLI::App* oracle = app.add_subcommand("oracle", "Cross-check greedy against brute force");
  add_common(oracle, oracle_args);

  CLI::App* check = app.add_subcommand("check", "Run the acceptance suite");
  std::optional<std::string> check_out;
  int check_workers = 1;
  check->add_option("-o,--out", check_out, "Directory for the check summary");
  check->add_option("-w,--workers", check_workers, "Parallel fixture workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (print_defaults) {
      std::printf("%s", qsf::dump_config(qsf::default_config()).c_str());
      return 0;
    }
    if (sim->parsed()) {
      const qsf::RunConfig config = load_with_overrides(sim_args);
      print_files(qsf::run_simulate(config, sim_args.out_dir.value_or(config.outputs.dir)));
      return 0;
    }
    if (ladder->parsed()) {
      const qsf::RunConfig config = load_with_overrides(ladder_args);
      print_files(qsf::run_ladder(config, ladder_args.out_dir.value_or(config.outputs.dir),
                                  config.solve.workers));
      return 0;
    }
    if (oracle->parsed()) {
      const qsf::RunConfig config = load_with_overrides(oracle_args);
      print_files(qsf::run_oracle(config, oracle_args.out_dir.value_or(config.outputs.dir)));
      return 0;
    }
    if (check->parsed()) {
      if (check_workers < 1) throw qsf::ConfigError("--workers must be >= 1");
      const std::vector<qsf::CriterionResult> results = qsf::run_acceptance_suite(check_workers);
      bool all = true;
      for (const qsf::CriterionResult& r : results) {
        all &= r.pass;
        std::printf("[%s] criterion %d %s: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.detail.c_str());
      }
      if (check_out) {
        std::filesystem::create_directories(*check_out);
        const std::string path = *check_out + "/check.json";
        qsf::write_text_file(path, qsf::check_summary_to_text(results));
        std::printf("wrote %s\n", path.c_str());
      }
      return all ? 0 : 1;
    }
    std::printf("%s", app.help().c_str());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
