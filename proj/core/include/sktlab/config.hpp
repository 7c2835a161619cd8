#pragma once

#include <filesystem>
#include <string>

#include "sktlab/simulator.hpp"

namespace sktlab {

/// Parses a JSON run configuration into a finalized SimConfig.
///
/// Unknown keys are rejected with the JSON path of the offending key
/// (SchemaViolation). A relative `initial.file` is resolved against
/// `base_dir`. When `pi` is absent the reversible measure is computed from
/// `a`; when it is present it is checked for detailed balance.
SimConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

SimConfig load_config(const std::filesystem::path& file);

/// Canonical JSON of every setting the run uses, defaults included, with
/// sorted keys.
std::string effective_config_json(const SimConfig& config);

/// SHA-256 of `effective_config_json`; independent of key order in the input.
std::string config_hash(const SimConfig& config);

}  // namespace sktlab
