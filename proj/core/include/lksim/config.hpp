#pragma once

#include "lksim/harness.hpp"
#include "lksim/learning.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lksim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full run configuration: environment, episode, trainer, outputs.
/// Defaults reproduce the standard environment, so an empty config file
/// is a complete configuration.
struct RunConfig {
  SimParams params;
  EpisodeConfig episode;
  TrainingConfig training;
  std::string output_dir = ".";

  /// Flat dotted-key serialization, sorted by key.
  std::map<std::string, std::string> to_map() const;

  /// Apply `key = value` overrides. Unknown keys and malformed values
  /// raise ConfigError naming the key.
  void apply(const std::string& key, const std::string& value);

  /// Cross-field validation; raises ConfigError naming the field.
  void validate() const;

  /// Stable hash of the environment-defining fields (stamped into
  /// policy files).
  std::uint64_t environment_hash() const;
};

/// Parse a flat key/value config file ('#' comments, blank lines ok).
RunConfig load_config_file(const std::string& path, RunConfig base = {});

std::uint64_t fnv1a64(const std::string& data);

}  // namespace lksim
