#include "sfbc/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "sfbc/error.hpp"
#include "sfbc/random.hpp"

namespace sfbc {

using nlohmann::json;

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'F', 'B', 'C', 'C', 'K', 'P', 'T'};
constexpr unsigned char kCheckpointVersion = 1;

std::string activation_name(Activation kind) { return kind == Activation::ReLU ? "relu" : "identity"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::ReLU;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation '" + name + "'");
}

json conv_to_json(const ConvConfig& conv) {
    json basis = json::array();
    for (const auto& spec : conv.basis) basis.push_back({{"name", basis_name(spec)}, {"n", spec.n}});
    return {{"basis", basis},
            {"window", window_name(conv.window)},
            {"mapping", mapping_name(conv.mapping)},
            {"symmetry", symmetry_name(conv.symmetry)},
            {"use_bias", conv.use_bias},
            {"use_self", conv.use_self},
            {"batch_size", conv.batch_size}};
}

ConvConfig conv_from_json(const json& j) {
    ConvConfig conv;
    for (const auto& axis : j.at("basis")) conv.basis.push_back(parse_basis(axis.at("name").get<std::string>(), axis.at("n").get<int>()));
    conv.window = parse_window(j.at("window").get<std::string>());
    conv.mapping = parse_mapping(j.at("mapping").get<std::string>());
    conv.symmetry = parse_symmetry(j.at("symmetry").get<std::string>());
    conv.use_bias = j.at("use_bias").get<bool>();
    conv.use_self = j.value("use_self", true);
    conv.batch_size = j.at("batch_size").get<std::size_t>();
    return conv;
}

json network_to_json(const NetworkConfig& config) {
    return {{"mp_steps", config.mp_steps},
            {"features_per_layer", config.features_per_layer},
            {"input_features", config.input_features},
            {"output_width", config.output_width},
            {"seed", config.seed},
            {"activation", activation_name(config.activation)},
            {"conv", conv_to_json(config.conv)}};
}

NetworkConfig network_from_json(const json& j) {
    NetworkConfig config;
    config.mp_steps = j.at("mp_steps").get<int>();
    config.features_per_layer = j.at("features_per_layer").get<int>();
    config.input_features = j.at("input_features").get<std::vector<std::string>>();
    config.output_width = j.at("output_width").get<int>();
    config.seed = j.at("seed").get<std::uint64_t>();
    config.activation = parse_activation(j.at("activation").get<std::string>());
    config.conv = conv_from_json(j.at("conv"));
    return config;
}

void validate(const NetworkConfig& config) {
    if (config.mp_steps < 1) throw ConfigError("mp_steps must be >= 1");
    if (config.features_per_layer < 1) throw ConfigError("features_per_layer must be >= 1");
    if (config.output_width < 1) throw ConfigError("output_width must be >= 1");
    if (config.input_features.empty()) throw ConfigError("network needs at least one input feature");
    if (config.conv.basis.empty()) throw ConfigError("network convolution has no basis axes");
}

}  // namespace

Matrix Network::forward(const ParticleGraph& graph, const Matrix& features) const {
    return apply_layer_stack(graph, features, layers);
}

std::size_t Network::parameter_count() const {
    std::size_t total = 0;
    for (const auto& layer : layers) total += layer.params.parameter_count();
    return total;
}

std::vector<double> Network::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& layer : layers) {
        const auto& p = layer.params;
        flat.insert(flat.end(), p.weights.begin(), p.weights.end());
        flat.insert(flat.end(), p.self_weights.begin(), p.self_weights.end());
        flat.insert(flat.end(), p.bias.begin(), p.bias.end());
    }
    return flat;
}

void Network::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ConfigError("parameter vector length mismatch");
    std::size_t offset = 0;
    auto take = [&](std::vector<double>& dst) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
        offset += dst.size();
    };
    for (auto& layer : layers) {
        take(layer.params.weights);
        take(layer.params.self_weights);
        take(layer.params.bias);
    }
}

Network init_network(const NetworkConfig& config) {
    validate(config);
    Network net;
    net.config = config;
    const std::size_t terms = config.conv.term_count();
    const auto steps = static_cast<std::size_t>(config.mp_steps);
    for (std::size_t l = 0; l < steps; ++l) {
        const std::size_t in = l == 0 ? config.input_width() : static_cast<std::size_t>(config.features_per_layer);
        const std::size_t out = l + 1 == steps ? static_cast<std::size_t>(config.output_width)
                                               : static_cast<std::size_t>(config.features_per_layer);
        LayerSpec layer;
        layer.config = config.conv;
        layer.params = ConvLayerParams::zeros(terms, in, out);
        layer.activation = l + 1 < steps;
        layer.kind = config.activation;
        Philox rng(config.seed, l);
        const double scale = 1.0 / std::sqrt(static_cast<double>(in * terms));
        for (double& w : layer.params.weights) w = rng.uniform(-scale, scale);
        const double self_scale = 1.0 / std::sqrt(static_cast<double>(in));
        if (config.conv.use_self)
            for (double& w : layer.params.self_weights) w = rng.uniform(-self_scale, self_scale);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::vector<double> flatten_gradients(const StackGrads& grads) {
    std::vector<double> flat;
    for (const auto& layer : grads.layers) {
        flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
        flat.insert(flat.end(), layer.self_weights.begin(), layer.self_weights.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

std::string network_config_json(const NetworkConfig& config) { return network_to_json(config).dump(); }

NetworkConfig network_config_from_json(const std::string& text) {
    try {
        return network_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid network config: ") + e.what());
    }
}

std::string config_hash(const NetworkConfig& config) {
    const std::string text = network_config_json(config);
    return detail::hex64(detail::fnv1a(text.data(), text.size()));
}

double advect(double x, double v, double a, double dt) { return x + dt * v + dt * dt * a; }

std::vector<double> advect(std::span<const double> x, std::span<const double> v, std::span<const double> a, double dt) {
    if (v.size() != x.size() || a.size() != x.size()) throw ConfigError("advect: length mismatch");
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = advect(x[k], v[k], a[k], dt);
    return out;
}

double finite_velocity(double x_t, double x_prev, double dt) { return (x_t - x_prev) / dt; }

std::vector<double> finite_velocity(std::span<const double> x_t, std::span<const double> x_prev, double dt) {
    if (x_t.size() != x_prev.size()) throw ConfigError("finite_velocity: length mismatch");
    std::vector<double> out(x_t.size());
    for (std::size_t k = 0; k < x_t.size(); ++k) out[k] = finite_velocity(x_t[k], x_prev[k], dt);
    return out;
}

double l2_loss(const Matrix& prediction, const Matrix& target) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
        throw ConfigError("l2_loss: shape mismatch");
    }
    if (prediction.size() == 0) return 0.0;
    return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

Matrix l2_loss_gradient(const Matrix& prediction, const Matrix& target) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
        throw ConfigError("l2_loss: shape mismatch");
    }
    return (prediction - target) * (2.0 / static_cast<double>(std::max<Eigen::Index>(prediction.size(), 1)));
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
    if (grads.size() != params.size()) throw ConfigError("adam_step: gradient length mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw ConfigError("adam_step: optimizer state length mismatch");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grads[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grads[k] * grads[k];
        const double m_hat = state.m[k] / c1;
        const double v_hat = state.v[k] / c2;
        params[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

double LrSchedule::rate(std::size_t update, std::size_t updates_per_epoch, std::size_t total_updates) const {
    switch (kind) {
    case Kind::Constant:
        return initial;
    case Kind::HalveEveryEpochs: {
        const std::size_t epoch = updates_per_epoch > 0 ? update / updates_per_epoch : 0;
        return initial * std::pow(0.5, static_cast<double>(epoch / std::max<std::size_t>(every, 1)));
    }
    case Kind::Geometric: {
        const std::size_t block = std::max<std::size_t>(every, 1);
        const std::size_t last = total_updates > 0 ? (total_updates - 1) / block : 0;
        if (last == 0) return initial;
        const double fraction = static_cast<double>(std::min(update / block, last)) / static_cast<double>(last);
        return initial * std::pow(final / initial, fraction);
    }
    }
    return initial;
}

std::size_t RolloutSchedule::length(std::size_t epoch) const {
    std::size_t len = std::max<std::size_t>(initial, 1);
    if (increment_every > 0) len += epoch / increment_every;
    return std::min(len, std::max(max, std::max<std::size_t>(initial, 1)));
}

TrainingSample TrainingTask::advance(std::size_t, std::size_t, const TrainingSample&, const Matrix&) const {
    throw ConfigError("task does not support rollouts longer than one step");
}

std::pair<double, std::vector<double>> sample_loss_gradient(const Network& network, const TrainingTask& task,
                                                            std::size_t index, std::size_t rollout,
                                                            bool stop_gradient) {
    rollout = std::max<std::size_t>(rollout, 1);
    std::vector<TrainingSample> samples;
    std::vector<StackTape> tapes;
    samples.push_back(task.sample(index));
    double loss = 0.0;
    for (std::size_t r = 0; r < rollout; ++r) {
        tapes.push_back(forward_stack(samples[r].graph, samples[r].features, network.layers));
        loss += l2_loss(tapes[r].output, samples[r].target);
        if (r + 1 < rollout) samples.push_back(task.advance(index, r + 1, samples[r], tapes[r].output));
    }
    const double scale = 1.0 / static_cast<double>(rollout);
    loss *= scale;

    const auto feedback = task.feedback();
    std::vector<double> grad(network.parameter_count(), 0.0);
    Matrix next_input_grad;
    for (std::size_t r = rollout; r-- > 0;) {
        Matrix upstream = l2_loss_gradient(tapes[r].output, samples[r].target) * scale;
        if (next_input_grad.size() > 0) {
            for (const auto& [feature_col, prediction_col] : feedback) {
                upstream.col(static_cast<Eigen::Index>(prediction_col)) +=
                    next_input_grad.col(static_cast<Eigen::Index>(feature_col));
            }
        }
        const bool need_input = r > 0 && !stop_gradient && !feedback.empty();
        StackGrads grads = backward_stack(samples[r].graph, tapes[r], network.layers, upstream, need_input);
        const std::vector<double> flat = flatten_gradients(grads);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += flat[k];
        next_input_grad = need_input ? std::move(grads.input) : Matrix();
    }
    return {loss, std::move(grad)};
}

TrainResult train_nnti(const TrainingTask& task, const NetworkConfig& net_config, const TrainConfig& train_config) {
    return train_nnti(task, init_network(net_config), train_config);
}

TrainResult train_nnti(const TrainingTask& task, Network network, const TrainConfig& cfg) {
    if (task.input_width() != network.config.input_width()) {
        throw ConfigError("task provides " + std::to_string(task.input_width()) + " input channels, network expects " +
                          std::to_string(network.config.input_width()));
    }
    if (task.output_width() != static_cast<std::size_t>(network.config.output_width)) {
        throw ConfigError("task target width does not match network output width");
    }
    if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
    if (task.sample_count() == 0 && cfg.epochs * cfg.updates_per_epoch > 0) throw ConfigError("task has no samples");

    TrainResult result;
    const std::size_t total = cfg.epochs * cfg.updates_per_epoch;
    Philox rng(cfg.seed, 0x5452414E);
    AdamState adam;
    std::vector<double> params = network.parameters();
    std::vector<std::size_t> queue;
    std::size_t cursor = 0;
    std::size_t current_rollout = 0;
    std::vector<std::size_t> eligible;

    std::size_t update = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::size_t rollout = cfg.rollout.length(epoch);
        if (rollout != current_rollout) {
            current_rollout = rollout;
            eligible.clear();
            for (std::size_t k = 0; k < task.sample_count(); ++k) {
                if (task.max_rollout(k) >= rollout) eligible.push_back(k);
            }
            if (eligible.empty()) throw ConfigError("no sample supports rollout length " + std::to_string(rollout));
            queue.clear();
            cursor = 0;
        }
        for (std::size_t u = 0; u < cfg.updates_per_epoch; ++u, ++update) {
            std::vector<double> grad(params.size(), 0.0);
            double loss = 0.0;
            for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                if (cursor == queue.size()) {
                    const auto perm = permutation(eligible.size(), rng);
                    queue.resize(perm.size());
                    for (std::size_t k = 0; k < perm.size(); ++k) queue[k] = eligible[perm[k]];
                    cursor = 0;
                }
                auto [l, g] = sample_loss_gradient(network, task, queue[cursor++], rollout, cfg.rollout.stop_gradient);
                loss += l;
                for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
            }
            const double inv = 1.0 / static_cast<double>(cfg.batch_size);
            loss *= inv;
            for (double& g : grad) g *= inv;
            if (!std::isfinite(loss)) throw TrainingDiverged("training loss became non-finite", update);
            const double lr = cfg.lr.rate(update, cfg.updates_per_epoch, total);
            adam_step(params, grad, adam, lr);
            network.set_parameters(params);
            result.history.push_back({update, lr, loss});
        }
    }
    result.network = std::move(network);
    return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryEntry>& history) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "update_index,lr,train_loss\n";
    os << std::setprecision(17);
    for (const auto& h : history) os << h.update << ',' << h.lr << ',' << h.loss << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const Network& network) {
    json tensors = json::array();
    for (std::size_t l = 0; l < network.layers.size(); ++l) {
        const auto& p = network.layers[l].params;
        const std::string prefix = "layer" + std::to_string(l) + ".";
        tensors.push_back({{"name", prefix + "weights"}, {"shape", {p.terms, p.in_features, p.out_features}}});
        tensors.push_back({{"name", prefix + "self_weights"}, {"shape", {p.in_features, p.out_features}}});
        tensors.push_back({{"name", prefix + "bias"}, {"shape", {p.out_features}}});
    }
    const json header = {{"format", "sfbc-checkpoint"},
                         {"dtype", "f64le"},
                         {"config", network_to_json(network.config)},
                         {"config_hash", config_hash(network.config)},
                         {"parameter_count", network.parameter_count()},
                         {"tensors", tensors}};
    const std::string text = header.dump(2);
    const auto payload = detail::encode_doubles(network.parameters());

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    os.put(static_cast<char>(kCheckpointVersion));
    detail::write_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

namespace {

json read_checkpoint_header(std::istream& is, const std::filesystem::path& path) {
    char magic[sizeof kCheckpointMagic];
    if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kCheckpointMagic)) {
        throw CorruptDataError("not a checkpoint file: " + path.string());
    }
    const int version = is.get();
    if (version != kCheckpointVersion) throw CorruptDataError("unsupported checkpoint version in " + path.string());
    std::uint64_t length = 0;
    if (!detail::read_u64(is, length) || length > (1u << 26)) throw CorruptDataError("truncated checkpoint header");
    std::string text(length, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(length))) throw CorruptDataError("truncated checkpoint header");
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        throw CorruptDataError("malformed checkpoint header in " + path.string());
    }
}

}  // namespace

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
    const json header = read_checkpoint_header(is, path);
    Network network = init_network(network_from_json(header.at("config")));
    if (header.at("config_hash").get<std::string>() != config_hash(network.config)) {
        throw CorruptDataError("checkpoint config hash mismatch in " + path.string());
    }
    const std::size_t count = header.at("parameter_count").get<std::size_t>();
    if (count != network.parameter_count()) throw CorruptDataError("checkpoint parameter count mismatch");
    std::vector<unsigned char> bytes(count * 8);
    if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
        throw CorruptDataError("truncated checkpoint payload in " + path.string());
    }
    std::vector<double> flat(count);
    detail::decode_doubles(bytes, flat);
    network.set_parameters(flat);
    return network;
}

std::string checkpoint_config_hash(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
    return read_checkpoint_header(is, path).at("config_hash").get<std::string>();
}

}  // namespace sfbc
