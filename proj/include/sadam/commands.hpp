#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace sadam {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitConfig = 2,
  kExitIo = 3,
};

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;  // replaces the config's seed list
  std::optional<std::filesystem::path> out;
  bool force = false;
  std::ostream* log = nullptr;  // progress lines; defaults to stdout
  std::ostream* err = nullptr;  // diagnostics; defaults to stderr
};

/// Out dir precedence: --out, config out_dir, $SADAM_OUT_DIR, ./out
std::filesystem::path resolve_out_dir(const std::optional<std::filesystem::path>& flag,
                                      const std::optional<std::string>& from_config);

/// Writes `content` to `path` unless an existing file carries a different
/// config hash; `force` overrides. Throws IoError.
void write_guarded(const std::filesystem::path& path, const std::string& content,
                   const std::string& config_hash, bool force);

/// Per seed: <name>_seed<s>.csv and <name>_seed<s>.json
int cmd_run(const CommandOptions& opts);
/// Per optimizer and seed: <name>_<label>_seed<s>.{csv,json}; plus <name>_compare.csv
int cmd_compare(const CommandOptions& opts);
/// Per seed: <name>_field_seed<s>.csv
int cmd_probe(const CommandOptions& opts);
/// Per seed: <name>_concentration_seed<s>.{csv,json}
int cmd_concentration(const CommandOptions& opts);
/// <name>_stability.{csv,json}
int cmd_stability(const CommandOptions& opts);
/// Published defaults as JSON on `os`.
int cmd_defaults(std::ostream& os);

extern const char* const kCompareCsvHeader;

}  // namespace sadam
