#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "schema.hpp"
#include "schema_text.hpp"
#include "sfbc/error.hpp"

namespace sfbc::cli {

const json& config_schema() {
    static const json schema = json::parse(kConfigSchemaText);
    return schema;
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json config;
    try {
        config = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    validate_schema(config_schema(), config);
    return config;
}

json command_defaults(const std::string& command, const std::string& scale) {
    const bool paper = scale == "paper";
    json d{{"version", 1}, {"command", command}, {"seed", 0}, {"scale", scale}};
    if (command == "gen-data") {
        d["case"] = "tc1";
    } else if (command == "toy") {
        d["task"] = "kernel";
        d["bases"] = {"sfbc", "linear"};
        d["n"] = {2};
        d["seeds"] = 4;
        d["updates"] = 8000;
        d["lr"] = 10.0;
        d["lr_final"] = 1e-4;
        d["frame_stride"] = 16;
        d["plot"] = false;
        d["record_runtime"] = false;
    } else if (command == "train") {
        d["case"] = "tc1";
        d["basis"] = "sfbc";
        d["rollout"] = 1;
        d["density_input"] = false;
    } else if (command == "eval") {
        d["case"] = "tc1";
    } else if (command == "bench") {
        d["bases"] = {"sfbc", "linear"};
        d["n"] = {2, 4, 8};
        d["dims"] = {1, 2, 3};
        d["archs"] = {0, 1, 2};
        d["reps"] = paper ? 64 : 20;
        d["warmup"] = 2;
        d["particles"] = paper ? 4096 : 512;
        d["lattice_2d"] = paper ? 64 : 24;
        d["lattice_3d"] = paper ? 16 : 8;
    }
    return d;
}

namespace {

/// Case-dependent training defaults, applied after the case is known.
void fill_train_defaults(json& c) {
    auto set = [&](const char* key, const json& value) {
        if (!c.contains(key)) c[key] = value;
    };
    if (c["case"] == "tc1") {
        set("n", 6);
        set("epochs", 5);
        set("updates", c["scale"] == "paper" ? 1000 : 200);
        set("batch", 4);
        set("lr", 1e-3);
        set("mp_steps", 4);
        set("features", 16);
    } else {
        set("task", "density");
        set("n", 4);
        set("epochs", 1);
        set("updates", c["scale"] == "paper" ? 4000 : 1000);
        set("batch", 1);
        set("lr", 1e-2);
        set("lr_final", 1e-4);
        set("depth", 1);
        set("features", 32);
    }
}

unsigned env_threads() {
    const char* text = std::getenv("SFBC_THREADS");
    if (!text || !*text) return 1;
    char* end = nullptr;
    const long value = std::strtol(text, &end, 10);
    if (*end != '\0' || value < 1) throw ConfigError(std::string("SFBC_THREADS must be a positive integer, got ") + text);
    return static_cast<unsigned>(value);
}

}  // namespace

json effective_config(const std::string& command, const json& file, const json& flags) {
    const bool train_echo = command == "eval" && file.value("command", "") == "train";
    if (file.contains("command") && file["command"] != command && !train_echo)
        throw ConfigError("config file is for command " + file["command"].get<std::string>() + ", not " + command);
    std::string scale = "desk";
    if (file.contains("scale")) scale = file["scale"];
    if (flags.contains("scale")) scale = flags["scale"];
    json config = command_defaults(command, scale);
    for (const auto& [key, value] : file.items()) config[key] = value;
    for (const auto& [key, value] : flags.items()) config[key] = value;
    config["command"] = command;
    config["scale"] = scale;
    if (!config.contains("threads")) config["threads"] = env_threads();
    if (command == "train") fill_train_defaults(config);
    validate_schema(config_schema(), config);
    return config;
}

std::filesystem::path output_directory(const json& config) {
    if (!config.contains("out")) throw ConfigError("missing output directory (--out)");
    const std::filesystem::path out = config["out"].get<std::string>();
    if (!std::filesystem::is_directory(out)) throw ConfigError("output directory does not exist: " + out.string());
    return out;
}

void echo_config(const json& config, const std::filesystem::path& directory) {
    std::ofstream out(directory / "config.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (directory / "config.json").string());
    out << config.dump(2) << '\n';
}

}  // namespace sfbc::cli
