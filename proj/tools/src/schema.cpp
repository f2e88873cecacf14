#include "schema.hpp"

#include <string>

#include "sfbc/error.hpp"

namespace sfbc::cli {

namespace {

using nlohmann::json;

bool has_type(const json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "boolean") return value.is_boolean();
    if (type == "integer") return value.is_number_integer();
    if (type == "number") return value.is_number();
    if (type == "null") return value.is_null();
    throw ConfigError("schema uses unknown type " + type);
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError("config " + path + ": " + message);
}

}  // namespace

void validate_schema(const json& schema, const json& value, const std::string& path) {
    if (schema.contains("type")) {
        const json& type = schema["type"];
        bool ok = false;
        if (type.is_string()) {
            ok = has_type(value, type.get<std::string>());
        } else {
            for (const auto& t : type) ok = ok || has_type(value, t.get<std::string>());
        }
        if (!ok) fail(path, "expected type " + type.dump() + ", got " + value.dump());
    }
    if (schema.contains("const") && value != schema["const"]) fail(path, "must equal " + schema["const"].dump());
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& option : schema["enum"]) found = found || option == value;
        if (!found) fail(path, value.dump() + " is not one of " + schema["enum"].dump());
    }
    if (value.is_number()) {
        const double x = value.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>())
            fail(path, "must be >= " + schema["minimum"].dump());
        if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
            fail(path, "must be > " + schema["exclusiveMinimum"].dump());
    }
    if (value.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema["required"])
                if (!value.contains(key.get<std::string>())) fail(path, "missing required key " + key.dump());
        }
        const json* properties = schema.contains("properties") ? &schema["properties"] : nullptr;
        const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
        for (const auto& [key, item] : value.items()) {
            if (properties && properties->contains(key)) {
                validate_schema((*properties)[key], item, path + "." + key);
            } else if (closed) {
                fail(path, "unknown key \"" + key + "\"");
            }
        }
    }
    if (value.is_array()) {
        if (schema.contains("minItems") && value.size() < schema["minItems"].get<std::size_t>())
            fail(path, "needs at least " + schema["minItems"].dump() + " items");
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < value.size(); ++i)
                validate_schema(schema["items"], value[i], path + "[" + std::to_string(i) + "]");
        }
    }
}

}  // namespace sfbc::cli
