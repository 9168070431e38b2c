#pragma once

#include "mildlevy/models.hpp"
#include "mildlevy/theory_checks.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mildlevy {

/// Parsed experiment configuration. `canonical` is the effective JSON (after
/// command-line overrides, without the output directory); its FNV-1a digest
/// is the config hash embedded in every artifact.
struct ExperimentConfig {
  nlohmann::json canonical;
  std::string hash;
  ModelDescriptor model;
  EnsembleSettings ensemble;
  double bdg = 3.0;
  std::string output_dir = "out";
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> output_dir;
};

ExperimentConfig parse_config(nlohmann::json config, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::string& file, const ConfigOverrides& overrides = {});

/// 16 hex digits of FNV-1a-64 over the compact dump (keys are sorted).
std::string config_hash(const nlohmann::json& canonical);

/// "neg_cbrt" or {"name": "affine", "a": 1, "b": 0}; shifted/yosida wrap an "inner" spec.
ScalarFunction parse_scalar_function(const nlohmann::json& spec);
/// "none", {"atoms": [[mark, rate], ...]} or {"uniform": {"a": .., "b": .., "rate": ..}}.
LevyMeasure parse_measure(const nlohmann::json& spec);
/// Builds the model object against the discretization object.
ModelDescriptor build_model(const nlohmann::json& model, const nlohmann::json& discretization);

const std::vector<std::string>& subcommand_catalog();

struct RunArtifact {
  std::string name;  // relative to the output directory
  std::string contents;
};

struct RunResult {
  int exit_code = 0;  // 0 pass, 2 check failure
  std::vector<TheoremReport> reports;
  std::vector<RunArtifact> artifacts;
  std::string message;  // human-readable lines for stdout
};

/// Receives each artifact as soon as it is complete (possibly from worker threads, one call at a time).
using ArtifactSink = std::function<void(const std::string& name, const std::string& contents)>;

/// Runs one subcommand. Throws ConfigurationError on bad input. Without a sink
/// the artifacts are collected in the result; the runner never touches files.
RunResult run_subcommand(const std::string& subcommand, const ExperimentConfig& config, const ArtifactSink& sink = {});

}  // namespace mildlevy
