#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfbc/convolution.hpp"
#include "sfbc/types.hpp"

namespace sfbc {

struct NetworkConfig {
    int mp_steps = 1;
    int features_per_layer = 16;
    std::vector<std::string> input_features{"feature"};
    int output_width = 1;
    ConvConfig conv;
    std::uint64_t seed = 0;
    Activation activation = Activation::ReLU;

    std::size_t input_width() const noexcept { return input_features.size(); }
};

/// A stack of convolution layers: input -> hidden (features_per_layer) ... -> output_width.
struct Network {
    NetworkConfig config;
    std::vector<LayerSpec> layers;

    Matrix forward(const ParticleGraph& graph, const Matrix& features) const;
    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);
};

Network init_network(const NetworkConfig& config);
/// Flattened parameter gradients in the order used by Network::parameters().
std::vector<double> flatten_gradients(const StackGrads& grads);

std::string network_config_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const std::string& text);
/// 16 hex digits (FNV-1a 64 of the canonical config JSON).
std::string config_hash(const NetworkConfig& config);

double advect(double x, double v, double a, double dt);
std::vector<double> advect(std::span<const double> x, std::span<const double> v, std::span<const double> a, double dt);
double finite_velocity(double x_t, double x_prev, double dt);
std::vector<double> finite_velocity(std::span<const double> x_t, std::span<const double> x_prev, double dt);

double l2_loss(const Matrix& prediction, const Matrix& target);
/// d l2_loss / d prediction.
Matrix l2_loss_gradient(const Matrix& prediction, const Matrix& target);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

struct LrSchedule {
    enum class Kind { Constant, HalveEveryEpochs, Geometric };
    Kind kind = Kind::HalveEveryEpochs;
    double initial = 1e-3;
    double final = 1e-4;     // Geometric only
    std::size_t every = 1;   // epochs (HalveEveryEpochs) or updates (Geometric)

    double rate(std::size_t update, std::size_t updates_per_epoch, std::size_t total_updates) const;
};

struct RolloutSchedule {
    std::size_t initial = 1;
    std::size_t increment_every = 0;  // epochs; 0 keeps the initial length
    std::size_t max = 1;
    bool stop_gradient = false;

    std::size_t length(std::size_t epoch) const;
};

struct TrainConfig {
    std::size_t epochs = 5;
    std::size_t updates_per_epoch = 1000;
    std::size_t batch_size = 4;
    LrSchedule lr;
    RolloutSchedule rollout;
    std::uint64_t seed = 0;
};

struct TrainingSample {
    ParticleGraph graph;
    Matrix features;
    Matrix target;
    std::vector<double> positions;  // used by tasks that rebuild graphs during rollout
};

/// Supplies training samples and, for rollouts, the next sample built from a prediction.
class TrainingTask {
public:
    virtual ~TrainingTask() = default;

    virtual std::size_t sample_count() const = 0;
    virtual TrainingSample sample(std::size_t index) const = 0;
    virtual std::size_t input_width() const = 0;
    virtual std::size_t output_width() const = 0;

    /// Longest rollout starting at this sample.
    virtual std::size_t max_rollout(std::size_t) const { return 1; }
    /// Sample for rollout step `step` (>= 1) given the previous sample and the network prediction on it.
    virtual TrainingSample advance(std::size_t index, std::size_t step, const TrainingSample& previous,
                                   const Matrix& prediction) const;
    /// (feature column of the next step, prediction column it is copied from).
    virtual std::vector<std::pair<std::size_t, std::size_t>> feedback() const { return {}; }
};

struct HistoryEntry {
    std::size_t update = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    Network network;
    std::vector<HistoryEntry> history;
};

/// Loss and flattened gradient of one (possibly unrolled) sample.
std::pair<double, std::vector<double>> sample_loss_gradient(const Network& network, const TrainingTask& task,
                                                            std::size_t index, std::size_t rollout,
                                                            bool stop_gradient);

TrainResult train_nnti(const TrainingTask& task, const NetworkConfig& net_config, const TrainConfig& train_config);
TrainResult train_nnti(const TrainingTask& task, Network network, const TrainConfig& train_config);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryEntry>& history);

void save_checkpoint(const std::filesystem::path& path, const Network& network);
Network load_checkpoint(const std::filesystem::path& path);
/// Config hash recorded in a checkpoint header without loading the tensors.
std::string checkpoint_config_hash(const std::filesystem::path& path);

}  // namespace sfbc
