/**
 * @file harness.hpp
 * @brief Run configuration, strict config parsing, run drivers and file
 *        output.
 *
 * Error convention: std::invalid_argument (and ConfigError) mean a bad
 * configuration (CLI exit 2); std::runtime_error means a solver failure
 * (CLI exit 1).
 */
#pragma once

#include "qsf/linearize.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace qsf {

/// Configuration error: carries the offending key and constraint.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OutputOptions {
  std::string dir = "out";
  bool trajectory = true;
  bool report = true;
  bool summary = true;
};

/// Full description of a run, loadable from a single config file.
struct RunConfig {
  GridSpec grid;
  std::string model = "linear";  ///< "nonlinear" | "linear" | "both"
  ModelParams params;
  DensityKind density = DensityKind::Dist2Rotations;
  std::vector<double> ladder;    ///< strictly decreasing eps values; may be empty
  int partition_level = 3;
  BoundaryProgram program;
  SolveOptions solve;
  std::vector<int> initial_broken;  ///< crack present at t=0, never charged
  OutputOptions outputs;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

RunConfig default_config();

/**
 * Parse and validate a config file (strict JSON): duplicate keys are a parse
 * error, unknown keys are rejected with their path, constraint violations
 * name the constraint. Throws ConfigError.
 */
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin);

/// Serialized form of a config (used by --print-defaults).
std::string dump_config(const RunConfig& config);

/// Problem for one model choice of a config.
Problem make_problem(const RunConfig& config, const Mesh& mesh, ModelKind model);

/// Trajectory serialization (schema qsfrac.trajectory.v1, deterministic bytes).
std::string trajectory_to_text(const Mesh& mesh, const Trajectory& traj);
void write_text_file(const std::string& path, const std::string& text);

/// Convergence-report serialization (schema qsfrac.report.v1, CSV).
std::string report_to_text(const std::vector<ConvergenceRow>& rows);

/// Drivers. Each returns the list of files written.
std::vector<std::string> run_simulate(const RunConfig& config, const std::string& out_dir);
std::vector<std::string> run_ladder(const RunConfig& config, const std::string& out_dir,
                                    int workers);
std::vector<std::string> run_oracle(const RunConfig& config, const std::string& out_dir);

}  // namespace qsf
