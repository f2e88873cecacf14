#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sfbc/datagen.hpp"
#include "sfbc/network.hpp"
#include "sfbc/results.hpp"

namespace sfbc {

enum class TaskKind { ToyKernel1D, ToyGradient1D, TC1Velocity, TC4Density, TC4Gradient };

std::string task_name(TaskKind kind);
TaskKind parse_task(std::string_view name);

struct TaskDescriptor {
    TaskKind kind = TaskKind::ToyKernel1D;
    std::vector<std::string> features;
    std::vector<std::string> targets;
    std::vector<std::size_t> eval_frames;  // empty for single-frame samples
};

/// [0, T/16, T/8, T/2] + s; equals [0, 128, 256, 1024] + s for 2048-step trajectories.
std::vector<std::size_t> tc1_eval_frames(std::size_t steps, std::size_t s = 16);
TaskDescriptor describe_task(TaskKind kind, std::size_t steps = 2048, std::size_t s = 16, bool density_input = false);

/// Adds one zero-displacement edge per node (kept sorted by target).
ParticleGraph with_self_edges(const ParticleGraph& graph);

struct TC1Data {
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;
    std::size_t steps = 0;
};

TC1Data load_tc1(const Dataset& dataset, bool load_train = true);

/// Toy sample at a frame: graph with self edges, unit features, target delta (kernel) or grad delta (gradient).
TrainingSample toy_sample(const Trajectory& trajectory, std::size_t frame, TaskKind kind);

/// All (trajectory, frame) samples, built once up front.
class ToyTask : public TrainingTask {
public:
    ToyTask(const std::vector<Trajectory>& trajectories, TaskKind kind, std::vector<std::size_t> frames = {});

    std::size_t sample_count() const override { return samples_.size(); }
    TrainingSample sample(std::size_t index) const override { return samples_.at(index); }
    std::size_t input_width() const override { return 1; }
    std::size_t output_width() const override { return 1; }
    const std::vector<TrainingSample>& samples() const { return samples_; }

private:
    std::vector<TrainingSample> samples_;
};

TrainingSample tc1_sample(const Trajectory& trajectory, std::size_t frame, std::size_t s = 16);

/// NNTI velocity task; rollouts advect positions with the predicted mean velocity over s steps.
class TC1Task : public TrainingTask {
public:
    TC1Task(const std::vector<Trajectory>& trajectories, std::size_t s = 16, std::vector<std::size_t> frames = {});

    std::size_t sample_count() const override { return items_.size(); }
    TrainingSample sample(std::size_t index) const override;
    std::size_t input_width() const override { return 2; }
    std::size_t output_width() const override { return 1; }
    std::size_t max_rollout(std::size_t index) const override;
    TrainingSample advance(std::size_t index, std::size_t step, const TrainingSample& previous,
                           const Matrix& prediction) const override;
    std::vector<std::pair<std::size_t, std::size_t>> feedback() const override { return {{0, 0}}; }

private:
    const std::vector<Trajectory>& trajectories_;
    std::size_t s_;
    std::vector<std::pair<std::size_t, std::size_t>> items_;
};

/// Features V/h^3 (and optionally rho); target rho or grad rho.
TrainingSample tc4_sample(const DatasetFile& file, TaskKind kind, bool density_input = false);

class TC4Task : public TrainingTask {
public:
    TC4Task(std::vector<DatasetFile> files, TaskKind kind, bool density_input = false);

    std::size_t sample_count() const override { return files_.size(); }
    TrainingSample sample(std::size_t index) const override;
    std::size_t input_width() const override { return density_input_ ? 2 : 1; }
    std::size_t output_width() const override { return kind_ == TaskKind::TC4Gradient ? 3 : 1; }

private:
    std::vector<DatasetFile> files_;
    TaskKind kind_;
    bool density_input_;
};

std::vector<DatasetFile> load_split(const Dataset& dataset, const std::string& split);

struct OracleResult {
    std::vector<double> theta;  // network parameter order: weights, self weights, bias
    double residual = 0.0;      // mean squared error over all evaluated nodes and channels
    double zero_loss = 0.0;     // loss of the all-zero predictor on the same data
    std::size_t rank = 0;
    std::size_t unknowns = 0;
};

/// Normal-equations optimum of a single linear convolution layer over the given samples (ridge 1e-10).
OracleResult least_squares_oracle(const std::vector<TrainingSample>& samples, const ConvConfig& config,
                                  std::size_t in_features, std::size_t out_features, double ridge = 1e-10);

/// Mean of per-sample L2 losses.
std::vector<double> evaluate_losses(const Network& network, const std::vector<TrainingSample>& samples);

/// Single message-passing layer, no activation, no window, no bias or self term.
NetworkConfig toy_network_config(const BasisSpec& basis, std::uint64_t seed);

struct ToyAblationConfig {
    TaskKind task = TaskKind::ToyKernel1D;
    std::vector<std::string> bases{"sfbc", "linear"};
    std::vector<int> n_values{2};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    TrainConfig train;
    std::size_t train_frame_stride = 16;
    bool with_oracle = true;
    unsigned threads = 1;

    static TrainConfig default_train();
};

struct ToyCell {
    std::string basis;
    int n = 0;
    std::uint64_t seed = 0;
    double loss = 0.0;
    double p05 = 0.0;
    double p95 = 0.0;
    double train_loss = 0.0;  // over the training samples the oracle is fitted on
    double oracle = 0.0;
    double zero_loss = 0.0;
    std::size_t rank = 0;
    double runtime_s = 0.0;
    bool diverged = false;
};

std::vector<ToyCell> run_toy_ablation(const TC1Data& data, const ToyAblationConfig& config);
ResultTable toy_table(TaskKind task, const std::vector<ToyCell>& cells);

struct TC1ExperimentConfig {
    NetworkConfig network;
    TrainConfig train;
    std::size_t s = 16;

    static TC1ExperimentConfig desk(const std::string& basis, int n, std::uint64_t seed);
};

struct TC1Report {
    std::vector<double> losses;  // per (test simulation, eval frame)
    double mean = 0.0;
    double zero_loss = 0.0;
    double runtime_s = 0.0;
    TrainResult trained;
};

std::vector<TrainingSample> tc1_eval_samples(const TC1Data& data, std::size_t s = 16);
TC1Report run_tc1_experiment(const TC1Data& data, const TC1ExperimentConfig& config);

struct TC4ExperimentConfig {
    TaskKind task = TaskKind::TC4Density;
    int depth = 1;
    int features = 32;
    bool density_input = false;
    std::string basis = "sfbc";
    int n = 4;
    std::uint64_t seed = 0;
    TrainConfig train;

    static TrainConfig default_train(std::size_t updates = 1000);
    NetworkConfig network_config() const;
};

struct TC4Report {
    std::vector<double> losses;  // per test sample
    double mean = 0.0;
    double runtime_s = 0.0;
    TrainResult trained;
};

TC4Report run_tc4_experiment(const std::vector<DatasetFile>& train, const std::vector<DatasetFile>& test,
                             const TC4ExperimentConfig& config);

struct BenchmarkConfig {
    std::vector<std::string> bases{"sfbc", "linear"};
    std::vector<int> n_values{2, 4, 8};
    std::vector<int> dims{1, 2, 3};
    std::vector<int> architectures{0, 1, 2};  // hidden layers of width 32
    std::size_t repetitions = 64;
    std::size_t warmup = 2;
    std::size_t particles_1d = 4096;
    std::size_t lattice_2d = 64;
    std::size_t lattice_3d = 16;
    std::uint64_t seed = 0;

    static BenchmarkConfig desk();
};

struct BenchmarkRow {
    std::string basis;
    int n = 0;
    int dim = 0;
    int hidden = 0;
    std::size_t particles = 0;
    std::size_t edges = 0;
    std::size_t reps = 0;
    double forward_mean_ms = 0.0;
    double forward_median_ms = 0.0;
    double backward_mean_ms = 0.0;
    double backward_median_ms = 0.0;
    double update_mean_ms = 0.0;
    double update_median_ms = 0.0;
};

/// Periodic lattice with about 32 neighbors per particle, normal-random features and targets.
struct BenchmarkProblem {
    ParticleGraph graph;
    Matrix features;
    Matrix target;
};

BenchmarkProblem benchmark_problem(int dim, std::size_t per_axis, std::uint64_t seed);
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config,
                                        const std::function<void(const BenchmarkRow&)>& progress = {});
void write_benchmark_csv(const std::filesystem::path& path, const std::vector<BenchmarkRow>& rows);

}  // namespace sfbc
