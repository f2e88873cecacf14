#include "sfbc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include <Eigen/QR>

#include "parallel.hpp"
#include "sfbc/error.hpp"
#include "sfbc/random.hpp"

namespace sfbc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return std::nan("");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Matrix column(std::span<const double> values) {
    Matrix out(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i), 0) = values[i];
    return out;
}

ParticleState state_1d(const Trajectory& traj, std::size_t frame) {
    ParticleState state;
    state.domain.dim = 1;
    state.support = traj.support;
    state.positions = traj.positions.at(frame);
    state.areas = traj.areas;
    state.masses = traj.masses;
    return state;
}

std::pair<std::string, std::string> split_basis_name(const std::string& name) {
    const auto colon = name.find(':');
    if (colon == std::string::npos) return {name, "-"};
    return {name.substr(0, colon), name.substr(colon + 1)};
}

}  // namespace

std::string task_name(TaskKind kind) {
    switch (kind) {
    case TaskKind::ToyKernel1D: return "toy_kernel";
    case TaskKind::ToyGradient1D: return "toy_gradient";
    case TaskKind::TC1Velocity: return "tc1_velocity";
    case TaskKind::TC4Density: return "tc4_density";
    case TaskKind::TC4Gradient: return "tc4_gradient";
    }
    return "unknown";
}

TaskKind parse_task(std::string_view name) {
    if (name == "toy_kernel" || name == "kernel") return TaskKind::ToyKernel1D;
    if (name == "toy_gradient" || name == "gradient") return TaskKind::ToyGradient1D;
    if (name == "tc1_velocity" || name == "tc1") return TaskKind::TC1Velocity;
    if (name == "tc4_density" || name == "density") return TaskKind::TC4Density;
    if (name == "tc4_gradient") return TaskKind::TC4Gradient;
    throw ConfigError("unknown task '" + std::string(name) +
                      "' (valid: toy_kernel, toy_gradient, tc1_velocity, tc4_density, tc4_gradient)");
}

std::vector<std::size_t> tc1_eval_frames(std::size_t steps, std::size_t s) {
    if (steps / 2 + 2 * s > steps) throw ConfigError("trajectory too short for the evaluation frames");
    return {s, steps / 16 + s, steps / 8 + s, steps / 2 + s};
}

TaskDescriptor describe_task(TaskKind kind, std::size_t steps, std::size_t s, bool density_input) {
    TaskDescriptor d;
    d.kind = kind;
    switch (kind) {
    case TaskKind::ToyKernel1D:
        d.features = {"one"};
        d.targets = {"number_density"};
        d.eval_frames = tc1_eval_frames(steps, s);
        break;
    case TaskKind::ToyGradient1D:
        d.features = {"one"};
        d.targets = {"number_density_gradient"};
        d.eval_frames = tc1_eval_frames(steps, s);
        break;
    case TaskKind::TC1Velocity:
        d.features = {"prior_velocity", "area"};
        d.targets = {"next_velocity"};
        d.eval_frames = tc1_eval_frames(steps, s);
        break;
    case TaskKind::TC4Density:
    case TaskKind::TC4Gradient:
        d.features = {"volume"};
        if (density_input) d.features.push_back("density");
        d.targets = kind == TaskKind::TC4Density ? std::vector<std::string>{"density"}
                                                 : std::vector<std::string>{"grad_x", "grad_y", "grad_z"};
        break;
    }
    return d;
}

ParticleGraph with_self_edges(const ParticleGraph& graph) {
    const auto d = static_cast<std::size_t>(graph.dim);
    const std::size_t e = graph.edge_count();
    std::vector<std::size_t> order(e);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return graph.targets[a] < graph.targets[b]; });
    ParticleGraph out;
    out.node_count = graph.node_count;
    out.dim = graph.dim;
    out.targets.reserve(e + graph.node_count);
    out.sources.reserve(e + graph.node_count);
    out.displacement.reserve((e + graph.node_count) * d);
    out.distance.reserve(e + graph.node_count);
    std::size_t p = 0;
    for (std::size_t i = 0; i < graph.node_count; ++i) {
        out.targets.push_back(static_cast<std::uint32_t>(i));
        out.sources.push_back(static_cast<std::uint32_t>(i));
        out.displacement.insert(out.displacement.end(), d, 0.0);
        out.distance.push_back(0.0);
        for (; p < e && graph.targets[order[p]] == i; ++p) {
            const std::size_t k = order[p];
            out.targets.push_back(graph.targets[k]);
            out.sources.push_back(graph.sources[k]);
            out.displacement.insert(out.displacement.end(), graph.displacement.begin() + static_cast<std::ptrdiff_t>(k * d),
                                    graph.displacement.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
            out.distance.push_back(graph.distance[k]);
        }
    }
    return out;
}

TC1Data load_tc1(const Dataset& dataset, bool load_train) {
    const auto& manifest = dataset.manifest();
    if (manifest.test_case != "tc1") throw ConfigError("dataset '" + manifest.name + "' is not a tc1 dataset");
    TC1Data data;
    for (std::size_t k = 0; k < manifest.entries.size(); ++k) {
        const bool is_test = manifest.entries[k].split == "test";
        if (!is_test && !load_train) continue;
        Trajectory traj = file_to_trajectory(dataset.load(k));
        data.steps = traj.frames() - 1;
        (is_test ? data.test : data.train).push_back(std::move(traj));
    }
    if (data.test.empty()) throw ConfigError("tc1 dataset has no test simulations");
    return data;
}

TrainingSample toy_sample(const Trajectory& trajectory, std::size_t frame, TaskKind kind) {
    const ParticleState state = state_1d(trajectory, frame);
    const ParticleGraph graph = neighbor_search(state);
    TrainingSample sample;
    sample.positions = state.positions;
    sample.features = Matrix::Ones(static_cast<Eigen::Index>(state.size()), 1);
    if (kind == TaskKind::ToyKernel1D) {
        sample.target = column(number_density(state, graph));
    } else if (kind == TaskKind::ToyGradient1D) {
        sample.target = column(weighted_kernel_gradient(state, graph, state.areas));
    } else {
        throw ConfigError("toy_sample needs a toy task");
    }
    sample.graph = with_self_edges(graph);
    return sample;
}

ToyTask::ToyTask(const std::vector<Trajectory>& trajectories, TaskKind kind, std::vector<std::size_t> frames) {
    for (const auto& trajectory : trajectories) {
        if (frames.empty()) {
            for (std::size_t t = 0; t < trajectory.frames(); ++t) samples_.push_back(toy_sample(trajectory, t, kind));
        } else {
            for (std::size_t t : frames)
                if (t < trajectory.frames()) samples_.push_back(toy_sample(trajectory, t, kind));
        }
    }
}

TrainingSample tc1_sample(const Trajectory& trajectory, std::size_t frame, std::size_t s) {
    TC1Sample derived = derive_tc1_sample(trajectory, frame, s);
    TrainingSample sample;
    ParticleState state = state_1d(trajectory, frame);
    sample.graph = neighbor_search(state);
    sample.features = std::move(derived.features);
    sample.target = std::move(derived.target);
    sample.positions = std::move(derived.positions);
    return sample;
}

TC1Task::TC1Task(const std::vector<Trajectory>& trajectories, std::size_t s, std::vector<std::size_t> frames)
    : trajectories_(trajectories), s_(s) {
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const std::size_t count = trajectories[k].frames();
        if (frames.empty()) {
            for (std::size_t t = s; t + s < count; ++t) items_.emplace_back(k, t);
        } else {
            for (std::size_t t : frames)
                if (t >= s && t + s < count) items_.emplace_back(k, t);
        }
    }
}

TrainingSample TC1Task::sample(std::size_t index) const {
    const auto [k, t] = items_.at(index);
    return tc1_sample(trajectories_[k], t, s_);
}

std::size_t TC1Task::max_rollout(std::size_t index) const {
    const auto [k, t] = items_.at(index);
    const std::size_t last = trajectories_[k].frames() - 1 - s_;
    return 1 + (last - t) / s_;
}

TrainingSample TC1Task::advance(std::size_t index, std::size_t step, const TrainingSample& previous,
                                const Matrix& prediction) const {
    const auto [k, t0] = items_.at(index);
    const Trajectory& traj = trajectories_[k];
    const std::size_t t = t0 + step * s_;
    if (t + s_ >= traj.frames()) throw ConfigError("rollout runs past the end of the trajectory");
    const double span = static_cast<double>(s_) * traj.dt;
    TrainingSample next;
    next.positions = previous.positions;
    for (std::size_t i = 0; i < next.positions.size(); ++i)
        next.positions[i] += span * prediction(static_cast<Eigen::Index>(i), 0);
    ParticleState state = state_1d(traj, t);
    state.positions = next.positions;
    next.graph = neighbor_search(state);
    next.features = previous.features;
    next.features.col(0) = prediction.col(0);
    next.target = derive_tc1_sample(traj, t, s_).target;
    return next;
}

TrainingSample tc4_sample(const DatasetFile& file, TaskKind kind, bool density_input) {
    const ParticleState state = tc4_state(file);
    const double h3 = state.support * state.support * state.support;
    const auto n = static_cast<Eigen::Index>(state.size());
    TrainingSample sample;
    sample.graph = neighbor_search(state);
    sample.positions = state.positions;
    sample.features = Matrix(n, density_input ? 2 : 1);
    const auto rho = file.field(0, "density");
    for (Eigen::Index i = 0; i < n; ++i) {
        sample.features(i, 0) = state.areas[static_cast<std::size_t>(i)] / h3;
        if (density_input) sample.features(i, 1) = rho[static_cast<std::size_t>(i)];
    }
    if (kind == TaskKind::TC4Density) {
        sample.target = column(rho);
    } else if (kind == TaskKind::TC4Gradient) {
        sample.target = Matrix(n, 3);
        const char* names[] = {"grad_x", "grad_y", "grad_z"};
        for (int a = 0; a < 3; ++a) {
            const auto g = file.field(0, names[a]);
            for (Eigen::Index i = 0; i < n; ++i) sample.target(i, a) = g[static_cast<std::size_t>(i)];
        }
    } else {
        throw ConfigError("tc4_sample needs a tc4 task");
    }
    return sample;
}

TC4Task::TC4Task(std::vector<DatasetFile> files, TaskKind kind, bool density_input)
    : files_(std::move(files)), kind_(kind), density_input_(density_input) {
    if (kind != TaskKind::TC4Density && kind != TaskKind::TC4Gradient) throw ConfigError("TC4Task needs a tc4 task");
}

TrainingSample TC4Task::sample(std::size_t index) const { return tc4_sample(files_.at(index), kind_, density_input_); }

std::vector<DatasetFile> load_split(const Dataset& dataset, const std::string& split) {
    std::vector<DatasetFile> out;
    for (std::size_t k : dataset.manifest().split(split)) out.push_back(dataset.load(k));
    return out;
}

OracleResult least_squares_oracle(const std::vector<TrainingSample>& samples, const ConvConfig& config,
                                  std::size_t in_features, std::size_t out_features, double ridge) {
    if (samples.empty()) throw ConfigError("oracle needs at least one sample");
    const std::size_t terms = config.term_count();
    const std::size_t conv_cols = terms * in_features;
    const std::size_t self_cols = config.use_self ? in_features : 0;
    const std::size_t cols = conv_cols + self_cols + (config.use_bias ? 1 : 0);

    ConvConfig probe = config;
    probe.use_bias = false;
    probe.use_self = false;
    ConvLayerParams selector = ConvLayerParams::zeros(terms, in_features, conv_cols);
    for (std::size_t k = 0; k < conv_cols; ++k) selector.weights[k * conv_cols + k] = 1.0;

    std::size_t rows = 0;
    for (const auto& s : samples) rows += static_cast<std::size_t>(s.features.rows());
    Matrix design(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Matrix target(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out_features));
    Eigen::Index r0 = 0;
    for (const auto& s : samples) {
        const Eigen::Index n = s.features.rows();
        if (static_cast<std::size_t>(s.features.cols()) != in_features ||
            static_cast<std::size_t>(s.target.cols()) != out_features)
            throw ConfigError("oracle sample shape does not match the layer");
        design.block(r0, 0, n, static_cast<Eigen::Index>(conv_cols)) = conv_forward(s.graph, s.features, selector, probe);
        if (self_cols > 0) design.block(r0, static_cast<Eigen::Index>(conv_cols), n, static_cast<Eigen::Index>(self_cols)) = s.features;
        if (config.use_bias) design.block(r0, static_cast<Eigen::Index>(cols - 1), n, 1).setOnes();
        target.middleRows(r0, n) = s.target;
        r0 += n;
    }

    OracleResult result;
    result.unknowns = cols * out_features;
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> plain(design);
    result.rank = static_cast<std::size_t>(plain.rank());

    Eigen::MatrixXd augmented(design.rows() + static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols));
    augmented.topRows(design.rows()) = design;
    augmented.bottomRows(static_cast<Eigen::Index>(cols)) =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols)) * std::sqrt(ridge);
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(augmented);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(augmented.rows(), static_cast<Eigen::Index>(out_features));
    rhs.topRows(design.rows()) = target;
    const Eigen::MatrixXd theta = qr.solve(rhs);

    const Eigen::MatrixXd residual = design * theta - target;
    const double count = static_cast<double>(rows * out_features);
    result.residual = residual.squaredNorm() / count;
    result.zero_loss = target.squaredNorm() / count;

    const std::size_t weights_end = conv_cols * out_features;
    const std::size_t self_end = weights_end + in_features * out_features;
    result.theta.assign(self_end + out_features, 0.0);
    for (std::size_t c = 0; c < out_features; ++c) {
        const auto oc = static_cast<Eigen::Index>(c);
        for (std::size_t k = 0; k < conv_cols; ++k)
            result.theta[k * out_features + c] = theta(static_cast<Eigen::Index>(k), oc);
        for (std::size_t f = 0; f < self_cols; ++f)
            result.theta[weights_end + f * out_features + c] = theta(static_cast<Eigen::Index>(conv_cols + f), oc);
        if (config.use_bias) result.theta[self_end + c] = theta(static_cast<Eigen::Index>(cols - 1), oc);
    }
    return result;
}

std::vector<double> evaluate_losses(const Network& network, const std::vector<TrainingSample>& samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(l2_loss(network.forward(s.graph, s.features), s.target));
    return out;
}

NetworkConfig toy_network_config(const BasisSpec& basis, std::uint64_t seed) {
    NetworkConfig config;
    config.mp_steps = 1;
    config.features_per_layer = 1;
    config.input_features = {"one"};
    config.output_width = 1;
    config.seed = seed;
    config.activation = Activation::Identity;
    config.conv.basis = {basis};
    config.conv.window = WindowKind::None;
    config.conv.use_bias = false;
    config.conv.use_self = false;
    return config;
}

TrainConfig ToyAblationConfig::default_train() {
    TrainConfig train;
    train.epochs = 1;
    train.updates_per_epoch = 8000;
    train.batch_size = 1;
    train.lr.kind = LrSchedule::Kind::Geometric;
    train.lr.initial = 10.0;
    train.lr.final = 1e-4;
    train.lr.every = 10;
    return train;
}

std::vector<ToyCell> run_toy_ablation(const TC1Data& data, const ToyAblationConfig& config) {
    if (config.task != TaskKind::ToyKernel1D && config.task != TaskKind::ToyGradient1D)
        throw ConfigError("toy ablation needs a toy task");
    if (data.train.empty()) throw ConfigError("toy ablation needs training simulations");
    std::vector<BasisSpec> specs;
    std::vector<std::string> names;
    for (const auto& name : config.bases) {
        for (int n : config.n_values) {
            specs.push_back(parse_basis(name, n));
            names.push_back(name);
        }
    }
    const std::size_t steps = data.test.front().frames() - 1;
    std::vector<TrainingSample> eval;
    for (const auto& traj : data.test)
        for (std::size_t t : tc1_eval_frames(steps)) eval.push_back(toy_sample(traj, t, config.task));

    std::vector<std::size_t> frames;
    for (std::size_t t = 0; t <= data.train.front().frames() - 1; t += std::max<std::size_t>(config.train_frame_stride, 1))
        frames.push_back(t);
    const ToyTask task(data.train, config.task, frames);

    std::vector<OracleResult> oracles(specs.size());
    if (config.with_oracle) {
        detail::parallel_for(specs.size(), config.threads, [&](std::size_t k) {
            oracles[k] = least_squares_oracle(task.samples(), toy_network_config(specs[k], 0).conv, 1, 1);
        });
    }

    const std::size_t seeds = config.seeds.size();
    std::vector<ToyCell> cells(specs.size() * seeds);
    detail::parallel_for(cells.size(), config.threads, [&](std::size_t idx) {
        const std::size_t k = idx / seeds;
        ToyCell& cell = cells[idx];
        cell.basis = names[k];
        cell.n = specs[k].n;
        cell.seed = config.seeds[idx % seeds];
        cell.oracle = oracles[k].residual;
        cell.zero_loss = oracles[k].zero_loss;
        cell.rank = oracles[k].rank;
        const auto start = Clock::now();
        try {
            TrainConfig train = config.train;
            train.seed = cell.seed;
            const TrainResult result = train_nnti(task, toy_network_config(specs[k], cell.seed), train);
            const auto losses = evaluate_losses(result.network, eval);
            cell.loss = mean_of(losses);
            cell.p05 = percentile(losses, 0.05);
            cell.p95 = percentile(losses, 0.95);
            cell.train_loss = mean_of(evaluate_losses(result.network, task.samples()));
        } catch (const TrainingDiverged&) {
            cell.diverged = true;
            cell.loss = cell.p05 = cell.p95 = cell.train_loss = std::nan("");
        }
        cell.runtime_s = seconds_since(start);
    });
    return cells;
}

ResultTable toy_table(TaskKind task, const std::vector<ToyCell>& cells) {
    ResultTable table;
    for (const auto& cell : cells) {
        const auto [basis, variant] = split_basis_name(cell.basis);
        ResultRow row;
        row.task = task_name(task);
        row.basis = basis;
        row.variant = variant;
        row.n = cell.n;
        row.seed = cell.seed;
        row.metric = cell.diverged ? "l2_diverged" : "l2";
        row.mean = cell.loss;
        row.p05 = cell.p05;
        row.p95 = cell.p95;
        row.runtime_s = cell.runtime_s;
        table.rows.push_back(row);
        row.metric = "train_l2";
        row.mean = row.p05 = row.p95 = cell.train_loss;
        row.runtime_s = 0.0;
        table.rows.push_back(row);
        row.metric = "oracle_l2";
        row.mean = row.p05 = row.p95 = cell.oracle;
        row.runtime_s = 0.0;
        table.rows.push_back(row);
    }
    return table;
}

TC1ExperimentConfig TC1ExperimentConfig::desk(const std::string& basis, int n, std::uint64_t seed) {
    TC1ExperimentConfig config;
    auto& net = config.network;
    net.mp_steps = 4;
    net.features_per_layer = 16;
    net.input_features = {"prior_velocity", "area"};
    net.output_width = 1;
    net.seed = seed;
    net.activation = Activation::ReLU;
    net.conv.basis = {parse_basis(basis, n)};
    net.conv.window = WindowKind::None;
    config.train.epochs = 5;
    config.train.updates_per_epoch = 200;
    config.train.batch_size = 4;
    config.train.lr.kind = LrSchedule::Kind::HalveEveryEpochs;
    config.train.lr.initial = 1e-3;
    config.train.lr.every = 1;
    config.train.seed = seed;
    return config;
}

std::vector<TrainingSample> tc1_eval_samples(const TC1Data& data, std::size_t s) {
    std::vector<TrainingSample> out;
    for (const auto& traj : data.test)
        for (std::size_t t : tc1_eval_frames(traj.frames() - 1, s)) out.push_back(tc1_sample(traj, t, s));
    return out;
}

TC1Report run_tc1_experiment(const TC1Data& data, const TC1ExperimentConfig& config) {
    if (data.train.empty()) throw ConfigError("tc1 experiment needs training simulations");
    const auto start = Clock::now();
    const TC1Task task(data.train, config.s);
    TC1Report report;
    report.trained = train_nnti(task, config.network, config.train);
    const auto eval = tc1_eval_samples(data, config.s);
    report.losses = evaluate_losses(report.trained.network, eval);
    report.mean = mean_of(report.losses);
    std::vector<double> zero;
    for (const auto& s : eval) zero.push_back(s.target.squaredNorm() / static_cast<double>(s.target.size()));
    report.zero_loss = mean_of(zero);
    report.runtime_s = seconds_since(start);
    return report;
}

TrainConfig TC4ExperimentConfig::default_train(std::size_t updates) {
    TrainConfig train;
    train.epochs = 1;
    train.updates_per_epoch = updates;
    train.batch_size = 1;
    train.lr.kind = LrSchedule::Kind::Geometric;
    train.lr.initial = 1e-2;
    train.lr.final = 1e-4;
    train.lr.every = std::max<std::size_t>(1, 25 * updates / 4000);
    return train;
}

NetworkConfig TC4ExperimentConfig::network_config() const {
    if (depth < 1) throw ConfigError("tc4 depth must be >= 1");
    NetworkConfig net;
    net.mp_steps = depth;
    net.features_per_layer = features;
    net.input_features = {"volume"};
    if (density_input) net.input_features.push_back("density");
    net.output_width = task == TaskKind::TC4Gradient ? 3 : 1;
    net.seed = seed;
    net.activation = Activation::ReLU;
    const BasisSpec spec = parse_basis(basis, n);
    net.conv.basis = {spec, spec, spec};
    net.conv.window = WindowKind::None;
    net.conv.use_bias = depth > 1;
    return net;
}

TC4Report run_tc4_experiment(const std::vector<DatasetFile>& train, const std::vector<DatasetFile>& test,
                             const TC4ExperimentConfig& config) {
    if (train.empty() || test.empty()) throw ConfigError("tc4 experiment needs training and test samples");
    const auto start = Clock::now();
    const TC4Task task(train, config.task, config.density_input);
    TrainConfig tc = config.train;
    tc.seed = config.seed;
    TC4Report report;
    report.trained = train_nnti(task, config.network_config(), tc);
    for (const auto& file : test) {
        const TrainingSample s = tc4_sample(file, config.task, config.density_input);
        report.losses.push_back(l2_loss(report.trained.network.forward(s.graph, s.features), s.target));
    }
    report.mean = mean_of(report.losses);
    report.runtime_s = seconds_since(start);
    return report;
}

BenchmarkConfig BenchmarkConfig::desk() {
    BenchmarkConfig config;
    config.repetitions = 20;
    config.warmup = 2;
    config.particles_1d = 512;
    config.lattice_2d = 24;
    config.lattice_3d = 8;
    return config;
}

BenchmarkProblem benchmark_problem(int dim, std::size_t per_axis, std::uint64_t seed) {
    if (dim < 1 || dim > 3) throw ConfigError("benchmark dimension must be 1, 2 or 3");
    const auto d = static_cast<std::size_t>(dim);
    std::size_t n = 1;
    for (std::size_t a = 0; a < d; ++a) n *= per_axis;
    const double spacing = 2.0 / static_cast<double>(per_axis);

    // Lattice shells: pick the first radius with at least 32 neighbors and cut between it and the next shell.
    std::vector<long> shells;
    const long reach = dim == 1 ? 20 : 6;
    std::vector<long> c(d, -reach);
    while (true) {
        long r2 = 0;
        for (long v : c) r2 += v * v;
        if (r2 > 0) shells.push_back(r2);
        std::size_t a = 0;
        while (a < d && ++c[a] > reach) c[a++] = -reach;
        if (a == d) break;
    }
    std::sort(shells.begin(), shells.end());
    const long inner = shells.at(31);
    const long outer = *std::upper_bound(shells.begin(), shells.end(), inner);
    const double h = spacing * 0.5 * (std::sqrt(static_cast<double>(inner)) + std::sqrt(static_cast<double>(outer)));
    if (2.0 * h >= 2.0) throw ConfigError("benchmark lattice too small for 32 neighbors");

    Philox rng(seed, 0x42454E43u);
    std::vector<double> positions(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rest = i;
        for (std::size_t a = 0; a < d; ++a) {
            const std::size_t k = rest % per_axis;
            rest /= per_axis;
            positions[i * d + a] = -1.0 + spacing * (static_cast<double>(k) + 0.5) + rng.normal(0.0, 0.01 * spacing);
        }
    }
    Domain domain;
    domain.dim = dim;
    BenchmarkProblem problem;
    problem.graph = neighbor_search(domain, positions, h);
    problem.features = Matrix(static_cast<Eigen::Index>(n), 1);
    problem.target = Matrix(static_cast<Eigen::Index>(n), 1);
    for (Eigen::Index i = 0; i < problem.features.rows(); ++i) problem.features(i, 0) = rng.normal();
    for (Eigen::Index i = 0; i < problem.target.rows(); ++i) problem.target(i, 0) = rng.normal();
    return problem;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config,
                                        const std::function<void(const BenchmarkRow&)>& progress) {
    if (config.repetitions == 0) throw ConfigError("benchmark repetitions must be positive");
    std::vector<BenchmarkRow> rows;
    for (int dim : config.dims) {
        const std::size_t per_axis =
            dim == 1 ? config.particles_1d : (dim == 2 ? config.lattice_2d : config.lattice_3d);
        const BenchmarkProblem problem = benchmark_problem(dim, per_axis, config.seed);
        for (const auto& basis : config.bases) {
            for (int n : config.n_values) {
                for (int hidden : config.architectures) {
                    NetworkConfig net;
                    net.mp_steps = hidden + 1;
                    net.features_per_layer = 32;
                    net.input_features = {"feature"};
                    net.output_width = 1;
                    net.seed = config.seed;
                    net.activation = Activation::ReLU;
                    net.conv.basis.assign(static_cast<std::size_t>(dim), parse_basis(basis, n));
                    net.conv.window = WindowKind::None;
                    Network network = init_network(net);
                    std::vector<double> params = network.parameters();
                    AdamState adam;

                    std::vector<double> fwd, bwd, upd;
                    for (std::size_t rep = 0; rep < config.warmup + config.repetitions; ++rep) {
                        const auto t0 = Clock::now();
                        const StackTape tape = forward_stack(problem.graph, problem.features, network.layers);
                        const auto t1 = Clock::now();
                        const Matrix upstream = l2_loss_gradient(tape.output, problem.target);
                        const StackGrads grads = backward_stack(problem.graph, tape, network.layers, upstream);
                        const auto t2 = Clock::now();
                        adam_step(params, flatten_gradients(grads), adam, 1e-3);
                        network.set_parameters(params);
                        const auto t3 = Clock::now();
                        if (rep < config.warmup) continue;
                        fwd.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                        bwd.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
                        upd.push_back(std::chrono::duration<double, std::milli>(t3 - t0).count());
                    }
                    BenchmarkRow row;
                    row.basis = basis;
                    row.n = n;
                    row.dim = dim;
                    row.hidden = hidden;
                    row.particles = problem.graph.node_count;
                    row.edges = problem.graph.edge_count();
                    row.reps = config.repetitions;
                    row.forward_mean_ms = mean_of(fwd);
                    row.forward_median_ms = percentile(fwd, 0.5);
                    row.backward_mean_ms = mean_of(bwd);
                    row.backward_median_ms = percentile(bwd, 0.5);
                    row.update_mean_ms = mean_of(upd);
                    row.update_median_ms = percentile(upd, 0.5);
                    if (progress) progress(row);
                    rows.push_back(row);
                }
            }
        }
    }
    return rows;
}

void write_benchmark_csv(const std::filesystem::path& path, const std::vector<BenchmarkRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "basis,n,dim,hidden_layers,particles,edges,reps,forward_mean_ms,forward_median_ms,backward_mean_ms,"
           "backward_median_ms,update_mean_ms,update_median_ms\n";
    out << std::setprecision(6);
    for (const auto& r : rows) {
        out << r.basis << ',' << r.n << ',' << r.dim << ',' << r.hidden << ',' << r.particles << ',' << r.edges << ','
            << r.reps << ',' << r.forward_mean_ms << ',' << r.forward_median_ms << ',' << r.backward_mean_ms << ','
            << r.backward_median_ms << ',' << r.update_mean_ms << ',' << r.update_median_ms << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace sfbc
