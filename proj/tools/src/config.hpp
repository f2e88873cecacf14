#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace sfbc::cli {

using nlohmann::json;

/// The published config schema (tools/schema/config.schema.json), embedded at build time.
const json& config_schema();

/// Parses and validates a config file.
json load_config_file(const std::filesystem::path& path);

/// Defaults for a command at a scale preset ("desk" or "paper").
json command_defaults(const std::string& command, const std::string& scale);

/// defaults <- file <- flags, validated; `threads` falls back to SFBC_THREADS, then 1.
json effective_config(const std::string& command, const json& file, const json& flags);

/// Checks that `out` names an existing directory.
std::filesystem::path output_directory(const json& config);

/// Writes config.json (sorted keys, two-space indent) into the output directory.
void echo_config(const json& config, const std::filesystem::path& directory);

}  // namespace sfbc::cli
