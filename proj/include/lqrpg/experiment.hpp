#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lqrpg/bench.hpp"
#include "lqrpg/oracles.hpp"
#include "lqrpg/optimizers.hpp"

// Experiment configuration, trace emission and the driver behind the CLI's
// `experiment` subcommand. The config format is JSON; see
// docs/config_schema.json for the full schema.

namespace lqrpg {

struct ProblemSpec {
  enum class Kind { pendulum, shear_building, scalar, inline_matrices };
  Kind kind = Kind::pendulum;
  PendulumParams pendulum;
  ShearBuildingParams building;
  ScalarLqr scalar;
  LqrProblem matrices;

  bool uses_randomness() const { return kind == Kind::shear_building; }
};

/// Starting gain: explicit K, or the optimal gain with R scaled by r_factor.
struct SeedGainSpec {
  std::optional<Mat> K;
  std::optional<double> r_factor;
};

struct MethodSpec {
  std::string name;
  OptimizerConfig cfg;  ///< seed_gain is filled in at run time
};

struct EmitFlags {
  bool trace_csv = true;
  bool landscape_grid = false;
  bool summary = true;
};

struct LandscapeSpec {
  std::optional<GridAxis> theta1;
  std::optional<GridAxis> theta2;
  int steps = 41;
};

struct ExperimentConfig {
  ProblemSpec problem;
  SeedGainSpec seed_gain;
  std::vector<MethodSpec> methods;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "out";
  EmitFlags emit;
  LandscapeSpec landscape;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses JSON text. Syntax errors report line and column; semantic errors
/// report the JSON pointer of the offending field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Pendulum with first_order (backtracking), gauss_newton (fixed 0.5) and
/// newton (fixed 1) and landscape emission enabled.
ExperimentConfig default_pendulum_config();

/// The default per-method settings used when a config does not list a method.
MethodSpec default_method(Method m);

LqrProblem build_problem(const ExperimentConfig& cfg);
Gain build_seed_gain(const ExperimentConfig& cfg, const LqrProblem& prob);

/// Default landscape window: centered on K*, wide enough to contain the seed.
std::pair<GridAxis, GridAxis> default_window(const Gain& k_star, const Gain& seed, int steps);

struct MethodOutcome {
  std::string name;
  std::optional<RunRecord> record;
  std::string error;  ///< set when the run threw before producing a record
};

struct ExperimentResult {
  std::vector<MethodOutcome> outcomes;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Runs every method, writing <name>_trace.csv, landscape.csv (plus
/// <name>_path.csv) and summary.json into output_dir. A failing method is
/// recorded in the result without stopping the others. Identical configs
/// produce byte-identical files.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Shortest round-trip decimal representation ("nan" / "inf" for non-finite).
std::string format_real(double x);

std::string trace_csv(const RunRecord& rec);
std::string path_csv(const RunRecord& rec);
std::string landscape_csv(const LandscapeGrid& grid);

/// Writes to a temporary sibling then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace lqrpg
