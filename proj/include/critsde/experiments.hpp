#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "critsde/common.hpp"
#include "critsde/io.hpp"

namespace critsde {

// One experiment per process run.  All randomness flows from `seed`; the
// worker count must not change any output bit; `strict` tightens numerical
// guards (kernel-truncation refusal instead of best effort).
struct ExperimentConfig {
  std::string experiment;
  ExponentPair exps;
  std::uint64_t seed = 2026;
  int workers = 1;
  bool strict = false;
  std::filesystem::path out_dir;
  nlohmann::json params;  // experiment-specific section, strictly validated

  nlohmann::json to_json() const;
};

// Strict parse: unknown keys anywhere are a ConfigError, as are missing
// required fields and out-of-range knobs.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Default parameter document for a named experiment (the CLI uses this when
// no --config is given).
nlohmann::json default_config(const std::string& experiment);

// Executes the named experiment: writes artifacts, plot scripts, and
// manifest.json under out_dir.  Returns 0 when every in-experiment check
// passes, 1 otherwise.  Malformed configs throw ConfigError (exit 2 at the
// CLI boundary).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace critsde
