#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "sfbc/error.hpp"
#include "sfbc/experiments.hpp"

namespace sfbc::cli {

namespace {

std::size_t as_size(const json& value) { return value.get<std::size_t>(); }

std::vector<int> int_list(const json& value) {
    if (value.is_array()) return value.get<std::vector<int>>();
    return {value.get<int>()};
}

std::pair<std::string, std::string> split_name(const std::string& name) {
    const auto colon = name.find(':');
    if (colon == std::string::npos) return {name, "-"};
    return {name.substr(0, colon), name.substr(colon + 1)};
}

Dataset open_dataset(const json& config) {
    if (!config.contains("data")) throw ConfigError("missing dataset manifest (--data)");
    const std::filesystem::path path = config["data"].get<std::string>();
    if (!std::filesystem::exists(path)) throw ConfigError("dataset manifest not found: " + path.string());
    return Dataset(path);
}

TaskKind tc4_task(const json& config) {
    const std::string task = config.value("task", "density");
    if (task == "density") return TaskKind::TC4Density;
    if (task == "gradient") return TaskKind::TC4Gradient;
    throw ConfigError("tc4 task must be density or gradient, got " + task);
}

NetworkConfig tc1_network(const json& c) {
    NetworkConfig net = TC1ExperimentConfig::desk(c["basis"], c["n"].get<int>(), c["seed"]).network;
    net.mp_steps = c["mp_steps"];
    net.features_per_layer = c["features"];
    net.conv.threads = c["threads"];
    return net;
}

TC4ExperimentConfig tc4_experiment(const json& c) {
    TC4ExperimentConfig exp;
    exp.task = tc4_task(c);
    exp.depth = c["depth"];
    exp.features = c["features"];
    exp.density_input = c["density_input"];
    exp.basis = c["basis"];
    exp.n = c["n"];
    exp.seed = c["seed"];
    return exp;
}

TrainConfig train_config(const json& c) {
    TrainConfig train;
    train.epochs = c["epochs"];
    train.updates_per_epoch = c["updates"];
    train.batch_size = c["batch"];
    train.seed = c["seed"];
    train.lr.initial = c["lr"];
    if (c.contains("lr_final")) {
        train.lr.kind = LrSchedule::Kind::Geometric;
        train.lr.final = c["lr_final"];
        train.lr.every = std::max<std::size_t>(1, 25 * train.epochs * train.updates_per_epoch / 4000);
    } else {
        train.lr.kind = LrSchedule::Kind::HalveEveryEpochs;
        train.lr.every = 1;
    }
    const std::size_t rollout = c["rollout"];
    train.rollout.initial = 1;
    train.rollout.max = rollout;
    train.rollout.increment_every = rollout > 1 ? 2 : 0;
    return train;
}

ResultRow summary_row(const std::string& task, const Network& network, const std::string& metric,
                      const std::vector<double>& values) {
    ResultRow row;
    row.task = task;
    const auto& spec = network.config.conv.basis.front();
    std::tie(row.basis, row.variant) = split_name(basis_name(spec));
    row.n = spec.n;
    row.seed = network.config.seed;
    row.window = window_name(network.config.conv.window);
    row.mapping = mapping_name(network.config.conv.mapping);
    row.metric = metric;
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
    row.p05 = percentile(values, 0.05);
    row.p95 = percentile(values, 0.95);
    return row;
}

}  // namespace

void cmd_gen_data(const json& c) {
    const auto out = output_directory(c);
    const bool paper = c["scale"] == "paper";
    const auto threads = c["threads"].get<unsigned>();
    if (c["case"] == "tc1") {
        TC1Config cfg = paper ? TC1Config::paper() : TC1Config::desk();
        cfg.seed = c["seed"];
        if (c.contains("simulations")) cfg.simulations = as_size(c["simulations"]);
        if (c.contains("test_simulations")) cfg.test_simulations = as_size(c["test_simulations"]);
        if (c.contains("steps")) cfg.sim.steps = as_size(c["steps"]);
        if (c.contains("particles")) cfg.sim.n_particles = as_size(c["particles"]);
        generate_tc1(cfg, out, threads);
    } else {
        TC4Config cfg = paper ? TC4Config::paper() : TC4Config::desk();
        cfg.seed = c["seed"];
        if (c.contains("samples")) cfg.train_samples = as_size(c["samples"]);
        if (c.contains("test_samples")) cfg.test_samples = as_size(c["test_samples"]);
        if (c.contains("lattice")) cfg.lattice = as_size(c["lattice"]);
        generate_tc4(cfg, out, threads);
    }
    echo_config(c, out);
    std::cout << (out / "manifest.json").string() << '\n';
}

void cmd_toy(const json& c) {
    const auto out = output_directory(c);
    ToyAblationConfig cfg;
    cfg.task = parse_task(c["task"].get<std::string>());
    if (cfg.task != TaskKind::ToyKernel1D && cfg.task != TaskKind::ToyGradient1D)
        throw ConfigError("toy task must be kernel or gradient");
    cfg.bases = c["bases"].get<std::vector<std::string>>();
    for (const auto& name : cfg.bases) parse_basis(name, 1);
    cfg.n_values = int_list(c["n"]);
    cfg.seeds.clear();
    const std::uint64_t base = c["seed"];
    for (std::size_t k = 0; k < as_size(c["seeds"]); ++k) cfg.seeds.push_back(base + k);
    cfg.train = ToyAblationConfig::default_train();
    cfg.train.updates_per_epoch = c["updates"];
    cfg.train.lr.initial = c["lr"];
    cfg.train.lr.final = c["lr_final"];
    cfg.train_frame_stride = c["frame_stride"];
    cfg.threads = c["threads"];

    const TC1Data data = load_tc1(open_dataset(c));
    const auto cells = run_toy_ablation(data, cfg);
    ResultTable table = toy_table(cfg.task, cells);
    if (!c["record_runtime"].get<bool>())
        for (auto& row : table.rows) row.runtime_s = 0.0;
    write_results_csv(out / "results.csv", table);
    if (c["plot"].get<bool>()) plot_results(out / "results.svg", table, task_name(cfg.task));
    echo_config(c, out);
}

void cmd_train(const json& c) {
    const auto out = output_directory(c);
    const Dataset dataset = open_dataset(c);
    json effective = c;
    TrainResult result;
    if (c["case"] == "tc1") {
        const TC1Data data = load_tc1(dataset);
        const TC1Task task(data.train);
        result = train_nnti(task, tc1_network(c), train_config(c));
    } else {
        const TC4ExperimentConfig exp = tc4_experiment(c);
        const TC4Task task(load_split(dataset, "train"), exp.task, exp.density_input);
        NetworkConfig net = exp.network_config();
        net.conv.threads = c["threads"];
        result = train_nnti(task, net, train_config(c));
    }
    save_checkpoint(out / "checkpoint.sfbc", result.network);
    write_history_csv(out / "history.csv", result.history);
    effective["checkpoint"] = (out / "checkpoint.sfbc").string();
    effective["config_hash"] = config_hash(result.network.config);
    echo_config(effective, out);
}

void cmd_eval(const json& c) {
    const auto out = output_directory(c);
    if (!c.contains("checkpoint")) throw ConfigError("missing checkpoint (--checkpoint)");
    const std::filesystem::path checkpoint = c["checkpoint"].get<std::string>();
    if (!std::filesystem::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
    const std::string stored = checkpoint_config_hash(checkpoint);
    if (c.contains("config_hash") && c["config_hash"] != stored)
        throw ConfigError("checkpoint config hash " + stored + " does not match config " +
                          c["config_hash"].get<std::string>());
    const Network network = load_checkpoint(checkpoint);
    const Dataset dataset = open_dataset(c);

    std::ofstream frames(out / "frames.csv", std::ios::trunc);
    if (!frames) throw std::runtime_error("cannot write " + (out / "frames.csv").string());
    frames << "sample,frame,l2,zero_l2\n";
    std::vector<double> losses, zeros;
    std::string task;
    auto record = [&](std::size_t sample, std::size_t frame, const TrainingSample& s) {
        const Matrix prediction = network.forward(s.graph, s.features);
        const double loss = l2_loss(prediction, s.target);
        const double zero = s.target.squaredNorm() / static_cast<double>(s.target.size());
        losses.push_back(loss);
        zeros.push_back(zero);
        char line[128];
        std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g\n", sample, frame, loss, zero);
        frames << line;
    };
    if (c["case"] == "tc1") {
        task = task_name(TaskKind::TC1Velocity);
        const TC1Data data = load_tc1(dataset, false);
        for (std::size_t k = 0; k < data.test.size(); ++k)
            for (std::size_t t : tc1_eval_frames(data.test[k].frames() - 1)) record(k, t, tc1_sample(data.test[k], t));
    } else {
        const TaskKind kind = network.config.output_width == 3 ? TaskKind::TC4Gradient : TaskKind::TC4Density;
        task = task_name(kind);
        const bool density_input = network.config.input_width() == 2;
        const auto test = load_split(dataset, "test");
        for (std::size_t k = 0; k < test.size(); ++k) record(k, 0, tc4_sample(test[k], kind, density_input));
    }
    if (!frames) throw std::runtime_error("failed writing frames.csv");

    ResultTable table;
    table.rows.push_back(summary_row(task, network, "l2", losses));
    table.rows.push_back(summary_row(task, network, "zero_l2", zeros));
    write_results_csv(out / "results.csv", table);
    json effective = c;
    effective["config_hash"] = stored;
    echo_config(effective, out);
}

void cmd_bench(const json& c) {
    if (c["threads"].get<unsigned>() > 1)
        throw ConfigError("bench runs in exclusive single-threaded mode; --threads must be 1");
    const auto out = output_directory(c);
    BenchmarkConfig cfg;
    cfg.bases = c["bases"].get<std::vector<std::string>>();
    for (const auto& name : cfg.bases) parse_basis(name, 1);
    cfg.n_values = int_list(c["n"]);
    cfg.dims = c["dims"].get<std::vector<int>>();
    cfg.architectures = c["archs"].get<std::vector<int>>();
    cfg.repetitions = c["reps"];
    cfg.warmup = c["warmup"];
    cfg.particles_1d = c["particles"];
    cfg.lattice_2d = c["lattice_2d"];
    cfg.lattice_3d = c["lattice_3d"];
    cfg.seed = c["seed"];
    const auto rows = run_benchmark(cfg, [](const BenchmarkRow& r) {
        std::cerr << r.basis << " n=" << r.n << " dim=" << r.dim << " hidden=" << r.hidden
                  << " update=" << r.update_median_ms << " ms\n";
    });
    write_benchmark_csv(out / "bench.csv", rows);
    echo_config(c, out);
}

}  // namespace sfbc::cli
