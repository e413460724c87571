#pragma once

// Simulator configuration files (JSON).
//
//   {
//     "icache": {"size": 32768, "assoc": 4, "miss_penalty": 30},
//     "dcache": {"size": 32768, "assoc": 4, "miss_penalty": 30},
//     "mispredict_penalty": 4,
//     "int_div_cycles": 24,
//     "channel_base": 65536,
//     "trace": false,
//     "blocking": "unified",        // or "per_cache"
//     "max_cycles": 4000000000
//   }
//
// Every key is optional and unknown keys are rejected. An empty file (or
// whitespace only) means all defaults.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ajt/core.hpp"

namespace ajt::config {

inline constexpr const char* kEnvVar = "AJTSIM_CONFIG";

/// Applies `j` over the defaults. Throws mem::ConfigError on unknown keys,
/// wrong types or invalid cache geometry.
core::CoreConfig from_json(const nlohmann::json& j);
core::CoreConfig parse(std::string_view text);
core::CoreConfig load_file(const std::string& path);

/// Path named by AJTSIM_CONFIG, if set and non-empty.
std::optional<std::string> env_path();
/// `explicit_path` if given, else AJTSIM_CONFIG, else defaults.
core::CoreConfig resolve(const std::optional<std::string>& explicit_path);

/// Every setting, in a fixed key order.
nlohmann::ordered_json to_json(const core::CoreConfig& c);
/// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string hash(const core::CoreConfig& c);

}  // namespace ajt::config
