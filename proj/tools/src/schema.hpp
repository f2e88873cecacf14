#pragma once

#include <nlohmann/json.hpp>

namespace sfbc::cli {

/// Checks `value` against a JSON Schema subset: type, const, enum, minimum, exclusiveMinimum, properties,
/// required, additionalProperties (boolean), items, minItems. Throws ConfigError naming the offending path.
void validate_schema(const nlohmann::json& schema, const nlohmann::json& value, const std::string& path = "$");

}  // namespace sfbc::cli
