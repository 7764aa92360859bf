#pragma once

#include "lksim/policy.hpp"

#include <string>

namespace lksim {

struct PolicyFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Versioned binary container: magic, version, level, seed, config hash,
/// row-major probability table (64-bit floats), per-message visit counts.
/// save -> load -> save is byte-identical.
void save_policy(const TabularPolicy& policy, const std::string& path);

/// Validates magic, version, dimensions, non-negative entries and row
/// sums (within 1e-9); throws PolicyFileError otherwise.
TabularPolicy load_policy(const std::string& path);

/// Human-readable inspection dump (header plus the visited rows).
void export_policy_json(const TabularPolicy& policy, const std::string& path);

}  // namespace lksim
