#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sadam/experiments.hpp"

namespace sadam {

inline constexpr int kSchemaVersion = 1;

/// Schema violation: unknown key, wrong type, or a value failing validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProbeSection {
  GridSpec grid;
  LgiConfig lgi;
};

struct ConcentrationSection {
  /// Probe point; drawn like a run's start point when absent.
  std::optional<std::vector<double>> point;
  std::vector<std::size_t> k_grid{16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  std::size_t trials = 200;
  /// auto | analytic | monte_carlo. auto picks analytic for linear, quadratic
  /// and constant objectives.
  std::string reference = "auto";
  std::size_t reference_k = 1000000;
  LgiConfig lgi;
};

struct StabilitySection {
  std::size_t swap_index = 0;
  bool identical_replacement = false;
  bool swap_roles = false;
};

struct LabelledOptimizer {
  std::string label;
  OptimizerSpec spec;
};

struct CliConfig {
  ExperimentConfig experiment;
  /// Optimizer set for `compare`; defaults to the single `optimizer` entry.
  std::vector<LabelledOptimizer> compare;
  ProbeSection probe;
  ConcentrationSection concentration;
  StabilitySection stability;
  std::optional<std::string> out_dir;

  /// Every field with defaults filled in. Excludes out_dir.
  nlohmann::json resolved;
  /// sha256 of resolved.dump()
  std::string hash;
};

/// Parses a config document. Throws ConfigError naming the offending field.
CliConfig parse_config(const nlohmann::json& doc);
/// Parses JSON text; syntax errors report line and column.
CliConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
/// Reads and parses a file. IoError when unreadable.
CliConfig load_config(const std::filesystem::path& path);

/// Re-derives resolved JSON and hash after fields were changed in code.
void refresh_resolved(CliConfig& cfg);

nlohmann::json to_json(const ObjectiveSpec& spec);
nlohmann::json to_json(const OptimizerSpec& spec);
nlohmann::json to_json(const LgiConfig& cfg);
nlohmann::json to_json(const StepSchedule& schedule);

/// Compiled-in published defaults for every optimizer.
nlohmann::json published_defaults();

}  // namespace sadam
