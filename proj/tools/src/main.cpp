#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "sfbc/error.hpp"

namespace {

using sfbc::cli::json;

enum class Kind { Int, Number, Text, Flag, IntList, TextList };

struct Flag {
    const char* name;
    const char* key;
    Kind kind;
    const char* help;
};

const std::map<std::string, std::vector<Flag>> kFlags = {
    {"gen-data",
     {{"--case", "case", Kind::Text, "tc1 or tc4"},
      {"--simulations", "simulations", Kind::Int, "tc1 simulations in total"},
      {"--test-simulations", "test_simulations", Kind::Int, "tc1 simulations held out for testing"},
      {"--steps", "steps", Kind::Int, "tc1 steps per simulation"},
      {"--particles", "particles", Kind::Int, "tc1 particles per simulation"},
      {"--samples", "samples", Kind::Int, "tc4 training samples"},
      {"--test-samples", "test_samples", Kind::Int, "tc4 test samples"},
      {"--lattice", "lattice", Kind::Int, "tc4 particles per lattice side"}}},
    {"toy",
     {{"--data", "data", Kind::Text, "tc1 dataset manifest"},
      {"--task", "task", Kind::Text, "kernel or gradient"},
      {"--bases", "bases", Kind::TextList, "comma-separated basis names"},
      {"--n", "n", Kind::IntList, "comma-separated term counts"},
      {"--seeds", "seeds", Kind::Int, "number of seeds, counted up from --seed"},
      {"--updates", "updates", Kind::Int, "weight updates per cell"},
      {"--lr", "lr", Kind::Number, "initial learning rate"},
      {"--lr-final", "lr_final", Kind::Number, "final learning rate"},
      {"--frame-stride", "frame_stride", Kind::Int, "use every k-th training frame"},
      {"--plot", "plot", Kind::Flag, "also write results.svg"},
      {"--record-runtime", "record_runtime", Kind::Flag, "write wall-clock seconds instead of 0"}}},
    {"train",
     {{"--case", "case", Kind::Text, "tc1 or tc4"},
      {"--data", "data", Kind::Text, "dataset manifest"},
      {"--task", "task", Kind::Text, "tc4 target: density or gradient"},
      {"--basis", "basis", Kind::Text, "basis name"},
      {"--n", "n", Kind::Int, "basis terms per axis"},
      {"--epochs", "epochs", Kind::Int, "epochs"},
      {"--updates", "updates", Kind::Int, "weight updates per epoch"},
      {"--batch", "batch", Kind::Int, "samples per update"},
      {"--lr", "lr", Kind::Number, "initial learning rate"},
      {"--lr-final", "lr_final", Kind::Number, "final learning rate (geometric decay)"},
      {"--rollout", "rollout", Kind::Int, "maximum unroll length; 1 disables unrolling"},
      {"--mp-steps", "mp_steps", Kind::Int, "tc1 message-passing steps"},
      {"--features", "features", Kind::Int, "hidden features per layer"},
      {"--depth", "depth", Kind::Int, "tc4 message-passing steps"},
      {"--density-input", "density_input", Kind::Flag, "tc4: add density as an input feature"}}},
    {"eval",
     {{"--case", "case", Kind::Text, "tc1 or tc4"},
      {"--data", "data", Kind::Text, "dataset manifest"},
      {"--checkpoint", "checkpoint", Kind::Text, "checkpoint written by train"}}},
    {"bench",
     {{"--bases", "bases", Kind::TextList, "comma-separated basis names"},
      {"--n", "n", Kind::IntList, "comma-separated term counts"},
      {"--dims", "dims", Kind::IntList, "comma-separated dimensions"},
      {"--archs", "archs", Kind::IntList, "comma-separated hidden layer counts"},
      {"--reps", "reps", Kind::Int, "timed repetitions"},
      {"--warmup", "warmup", Kind::Int, "untimed repetitions"},
      {"--particles", "particles", Kind::Int, "1D particle count"},
      {"--lattice-2d", "lattice_2d", Kind::Int, "2D lattice side"},
      {"--lattice-3d", "lattice_3d", Kind::Int, "3D lattice side"}}},
};

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

long long to_int(const std::string& text, const char* name) {
    std::size_t used = 0;
    long long value = 0;
    try {
        value = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty()) throw sfbc::ConfigError(std::string(name) + " expects an integer, got " + text);
    return value;
}

json convert(const Flag& flag, const std::string& raw) {
    switch (flag.kind) {
    case Kind::Int: return to_int(raw, flag.name);
    case Kind::Number: {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(raw, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != raw.size() || raw.empty()) throw sfbc::ConfigError(std::string(flag.name) + " expects a number");
        return value;
    }
    case Kind::Text: return raw;
    case Kind::Flag: return true;
    case Kind::IntList: {
        json list = json::array();
        for (const auto& part : split(raw)) list.push_back(to_int(part, flag.name));
        return list;
    }
    case Kind::TextList: return split(raw);
    }
    return raw;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Separable basis convolutions for particle data: data generation, ablations, training, benchmarks"};
    app.require_subcommand(1);

    struct Common {
        std::string config, out, scale;
        long long seed = 0;
        long long threads = 0;
    };
    std::map<std::string, Common> common;
    std::map<std::string, std::map<std::string, std::string>> raw;
    std::map<std::string, std::map<std::string, bool>> flags;

    for (const auto& [name, table] : kFlags) {
        CLI::App* sub = app.add_subcommand(name);
        Common& c = common[name];
        sub->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", c.out, "existing output directory");
        sub->add_option("--seed", c.seed, "base seed")->check(CLI::NonNegativeNumber);
        sub->add_option("--scale", c.scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
        sub->add_option("--threads", c.threads, "worker threads (default: SFBC_THREADS or 1)")
            ->check(CLI::PositiveNumber);
        for (const auto& flag : table) {
            if (flag.kind == Kind::Flag) {
                sub->add_flag(flag.name, flags[name][flag.key], flag.help);
            } else {
                sub->add_option(flag.name, raw[name][flag.key], flag.help);
            }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        const Common& c = common[command];
        json file = json::object();
        if (!c.config.empty()) file = sfbc::cli::load_config_file(c.config);
        json overrides = json::object();
        if (sub->count("--out")) overrides["out"] = c.out;
        if (sub->count("--seed")) overrides["seed"] = c.seed;
        if (sub->count("--scale")) overrides["scale"] = c.scale;
        if (sub->count("--threads")) overrides["threads"] = c.threads;
        for (const auto& flag : kFlags.at(command)) {
            if (sub->count(flag.name) == 0) continue;
            overrides[flag.key] = convert(flag, flag.kind == Kind::Flag ? "" : raw[command][flag.key]);
        }
        const json config = sfbc::cli::effective_config(command, file, overrides);
        if (command == "gen-data") sfbc::cli::cmd_gen_data(config);
        if (command == "toy") sfbc::cli::cmd_toy(config);
        if (command == "train") sfbc::cli::cmd_train(config);
        if (command == "eval") sfbc::cli::cmd_eval(config);
        if (command == "bench") sfbc::cli::cmd_bench(config);
    } catch (const sfbc::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid config value: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fault: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
