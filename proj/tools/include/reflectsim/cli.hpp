// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "reflectsim/diagnostics.hpp"
#include "reflectsim/penalty.hpp"
#include "reflectsim/reflection.hpp"
#include "reflectsim/scale.hpp"

namespace reflectsim::cli {

// Typed command payloads, one per `command` value.

struct SimulateCommand {
  DiffusionSpec spec;
  SimulationConfig simulation;
  /// When set, simulate member n of this family instead of the reflected
  /// process; the l column is then 0.
  std::optional<PenaltyFamily> family;
  int n = 1;
};

struct ScaleCommand {
  CoefficientPair coeffs;
  ScaleConfig scale;
  std::vector<double> points;
};

struct CheckCommand {
  PenaltyFamily family;
  DiffusionSpec spec;
  std::vector<int> n_list;
  ProbePlan probes;
};

struct StudyCommand {
  PenaltyFamily family;
  DiffusionSpec spec;
  std::vector<int> n_list;
  double epsilon = 0.2;
  SimulationConfig simulation;
  /// "rbm" compares against the closed-form RBM law, "reflected" against
  /// the simulated reflected sample.
  std::string target = "reflected";
};

struct SkewCommand {
  std::vector<double> k;
  double a = 200.0;
  SimulationConfig simulation;
};

struct ModulusCommand {
  CoefficientPair coeffs;
  double z0 = 0.0;
  SimulationConfig simulation;
  ModulusQuery query;
};

using Command = std::variant<SimulateCommand, ScaleCommand, CheckCommand, StudyCommand,
                             SkewCommand, ModulusCommand>;

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::optional<std::string> output;
  Command payload;
};

/// Schema-checks a config document (unknown keys rejected) and builds the
/// typed command. `seed_override` replaces the config seed. Throws
/// ValidationError.
RunConfig parse_run_config(const nlohmann::json& doc,
                           std::optional<std::uint64_t> seed_override = std::nullopt);

struct Report {
  std::string csv;
  /// Set when the run completed but the result is numerically invalid (a
  /// study with more than 0.1% failed paths). The CSV is still written.
  std::optional<std::string> numerical_failure;
};

/// Runs the command. Warnings go to `log`. Throws reflectsim errors.
Report execute(const RunConfig& config, std::size_t threads, std::ostream& log);

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

inline constexpr std::string_view kStudyHeader =
    "n,ks,excursion_prob,excursion_se,coupled_sup_mean,paths,h,seed";

std::string write_study_csv(const std::vector<StudyRow>& rows);

/// Inverse of write_study_csv. Throws ValidationError on malformed input.
std::vector<StudyRow> parse_study_csv(std::string_view csv);

/// Full front end: flags, config loading, execution, exit-code mapping.
/// Returns 0 on success, 2 on validation errors, 3 on numerical failures.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace reflectsim::cli
