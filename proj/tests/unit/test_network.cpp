#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "sfbc/error.hpp"
#include "sfbc/experiments.hpp"
#include "sfbc/network.hpp"

namespace sfbc {
namespace {

class FixedTask : public TrainingTask {
public:
    FixedTask(std::vector<TrainingSample> samples, std::size_t in, std::size_t out)
        : samples_(std::move(samples)), in_(in), out_(out) {}
    std::size_t sample_count() const override { return samples_.size(); }
    TrainingSample sample(std::size_t i) const override { return samples_.at(i); }
    std::size_t input_width() const override { return in_; }
    std::size_t output_width() const override { return out_; }

private:
    std::vector<TrainingSample> samples_;
    std::size_t in_, out_;
};

NetworkConfig small_config(std::uint64_t seed, int mp_steps = 2) {
    NetworkConfig c;
    c.mp_steps = mp_steps;
    c.features_per_layer = 4;
    c.input_features = {"a", "b"};
    c.output_width = 1;
    c.conv.basis = {BasisSpec{BasisKind::Fourier, 4, FourierVariant::SFBC}};
    c.seed = seed;
    return c;
}

std::vector<TrainingSample> random_samples(std::size_t count, std::size_t in, std::size_t out, std::uint64_t seed) {
    std::vector<TrainingSample> samples;
    Philox rng(seed, 3);
    for (std::size_t s = 0; s < count; ++s) {
        TrainingSample t;
        t.graph = test::random_graph(12, 40, 1, seed * 100 + s);
        t.features = test::random_matrix(12, static_cast<Eigen::Index>(in), rng);
        t.target = test::random_matrix(12, static_cast<Eigen::Index>(out), rng);
        samples.push_back(std::move(t));
    }
    return samples;
}

TEST(Init, DeterministicAndSeeded) {
    const Network a = init_network(small_config(5));
    const Network b = init_network(small_config(5));
    const Network c = init_network(small_config(6));
    EXPECT_EQ(a.parameters(), b.parameters());
    EXPECT_NE(a.parameters(), c.parameters());
}

TEST(Init, BiasZeroAndWeightBound) {
    const Network net = init_network(small_config(9, 3));
    ASSERT_EQ(net.layers.size(), 3u);
    for (const auto& layer : net.layers) {
        for (double b : layer.params.bias) EXPECT_EQ(b, 0.0);
        const double s = 1.0 / std::sqrt(static_cast<double>(layer.params.in_features * layer.params.terms));
        for (double w : layer.params.weights) EXPECT_LE(std::abs(w), s);
    }
    EXPECT_TRUE(net.layers[0].activation);
    EXPECT_FALSE(net.layers[2].activation);
    EXPECT_EQ(net.layers[0].params.in_features, 2u);
    EXPECT_EQ(net.layers[2].params.out_features, 1u);
}

TEST(Init, InvalidConfig) {
    auto c = small_config(0);
    c.mp_steps = 0;
    EXPECT_THROW(init_network(c), ConfigError);
    c = small_config(0);
    c.features_per_layer = 0;
    EXPECT_THROW(init_network(c), ConfigError);
}

TEST(Network, ParameterRoundTrip) {
    Network net = init_network(small_config(1));
    auto p = net.parameters();
    for (double& v : p) v += 1.0;
    net.set_parameters(p);
    EXPECT_EQ(net.parameters(), p);
    p.pop_back();
    EXPECT_THROW(net.set_parameters(p), ConfigError);
}

TEST(Kinematics, Advect) {
    EXPECT_EQ(advect(0.3, 0.0, 0.0, 0.1), 0.3);
    EXPECT_DOUBLE_EQ(advect(0.0, 1.0, 0.0, 0.1), 0.1);
    EXPECT_NEAR(advect(0.0, 1.0, -10.0, 0.1), 0.0, 1e-16);
}

TEST(Kinematics, FiniteVelocity) {
    EXPECT_EQ(finite_velocity(0.4, 0.4, 0.1), 0.0);
    EXPECT_DOUBLE_EQ(finite_velocity(0.3, 0.1, 0.1), 2.0);
    EXPECT_EQ(finite_velocity(0.3, 0.1, 0.1), -finite_velocity(0.1, 0.3, 0.1));
}

TEST(Loss, L2) {
    Philox rng(2);
    const Matrix a = test::random_matrix(5, 3, rng);
    EXPECT_EQ(l2_loss(a, a), 0.0);
    EXPECT_DOUBLE_EQ(l2_loss(a.array() + 1.0, a), 1.0);
    const Matrix b = test::random_matrix(5, 3, rng);
    const Matrix twice = b + 2.0 * (a - b);
    EXPECT_NEAR(l2_loss(twice, b), 4.0 * l2_loss(a, b), 1e-14);
    EXPECT_THROW(l2_loss(a, Matrix::Zero(5, 2)), ConfigError);
}

TEST(Adam, ZeroGradient) {
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.0, 0.0};
    AdamState s;
    adam_step(p, g, s, 0.1);
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
    EXPECT_EQ(s.step, 1u);
}

TEST(Adam, FirstStepIsSignStep) {
    std::vector<double> p{1.0, 1.0, 1.0};
    const std::vector<double> g{3.0, -0.01, 1e3};
    AdamState s;
    adam_step(p, g, s, 0.1);
    EXPECT_NEAR(p[0], 0.9, 1e-8);
    EXPECT_NEAR(p[1], 1.1, 1e-6);
    EXPECT_NEAR(p[2], 0.9, 1e-8);
}

TEST(Adam, QuadraticMatchesScalarReference) {
    std::vector<double> p{1.0};
    AdamState s;
    double theta = 1.0, m = 0.0, v = 0.0;
    double previous = 1.0;
    for (int t = 1; t <= 10; ++t) {
        const std::vector<double> g{2.0 * p[0]};
        adam_step(p, g, s, 0.1);
        const double gr = 2.0 * theta;
        m = 0.9 * m + 0.1 * gr;
        v = 0.999 * v + 0.001 * gr * gr;
        theta -= 0.1 * (m / (1.0 - std::pow(0.9, t))) / (std::sqrt(v / (1.0 - std::pow(0.999, t))) + 1e-8);
        EXPECT_NEAR(p[0], theta, 1e-14);
        EXPECT_LT(std::abs(p[0]), std::abs(previous));
        previous = p[0];
    }
}

TEST(Schedule, HalveEveryEpoch) {
    LrSchedule s;
    s.kind = LrSchedule::Kind::HalveEveryEpochs;
    s.initial = 1e-3;
    s.every = 1;
    EXPECT_DOUBLE_EQ(s.rate(0, 100, 500), 1e-3);
    EXPECT_DOUBLE_EQ(s.rate(99, 100, 500), 1e-3);
    EXPECT_DOUBLE_EQ(s.rate(100, 100, 500), 5e-4);
    EXPECT_DOUBLE_EQ(s.rate(499, 100, 500), 1e-3 / 16);
}

TEST(Schedule, GeometricEndpoints) {
    LrSchedule s;
    s.kind = LrSchedule::Kind::Geometric;
    s.initial = 1e-2;
    s.final = 1e-4;
    s.every = 25;
    EXPECT_DOUBLE_EQ(s.rate(0, 4000, 4000), 1e-2);
    EXPECT_NEAR(s.rate(3999, 4000, 4000), 1e-4, 1e-18);
    double last = 1.0;
    for (std::size_t u = 0; u < 4000; u += 25) {
        const double r = s.rate(u, 4000, 4000);
        EXPECT_LT(r, last);
        EXPECT_EQ(r, s.rate(u + 24, 4000, 4000));
        last = r;
    }
}

TEST(Schedule, Rollout) {
    RolloutSchedule r;
    EXPECT_EQ(r.length(0), 1u);
    EXPECT_EQ(r.length(10), 1u);
    r.increment_every = 2;
    r.max = 3;
    EXPECT_EQ(r.length(0), 1u);
    EXPECT_EQ(r.length(2), 2u);
    EXPECT_EQ(r.length(9), 3u);
}

TEST(Train, ZeroEpochsKeepsInitialParameters) {
    const FixedTask task(random_samples(3, 2, 1, 1), 2, 1);
    TrainConfig cfg;
    cfg.epochs = 0;
    const auto result = train_nnti(task, small_config(4), cfg);
    EXPECT_EQ(result.network.parameters(), init_network(small_config(4)).parameters());
    EXPECT_TRUE(result.history.empty());
}

TEST(Train, DeterministicHistory) {
    const FixedTask task(random_samples(5, 2, 1, 2), 2, 1);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.updates_per_epoch = 6;
    cfg.batch_size = 2;
    const auto a = train_nnti(task, small_config(4), cfg);
    const auto b = train_nnti(task, small_config(4), cfg);
    ASSERT_EQ(a.history.size(), 12u);
    for (std::size_t k = 0; k < a.history.size(); ++k) {
        EXPECT_EQ(a.history[k].loss, b.history[k].loss);
        EXPECT_EQ(a.history[k].lr, b.history[k].lr);
    }
    EXPECT_EQ(a.network.parameters(), b.network.parameters());
}

TEST(Train, WidthMismatch) {
    const FixedTask task(random_samples(2, 3, 1, 3), 3, 1);
    EXPECT_THROW(train_nnti(task, small_config(0), TrainConfig{}), ConfigError);
}

TEST(Train, DivergenceIsReported) {
    auto samples = random_samples(2, 2, 1, 4);
    samples[0].target(0, 0) = std::numeric_limits<double>::quiet_NaN();
    const FixedTask task(samples, 2, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.updates_per_epoch = 4;
    cfg.batch_size = 2;
    EXPECT_THROW(train_nnti(task, small_config(0), cfg), TrainingDiverged);
}

TEST(Train, TwoLayerGradientMatchesFiniteDifference) {
    const FixedTask task(random_samples(1, 2, 1, 5), 2, 1);
    Network net = init_network(small_config(8, 2));
    auto [loss, grad] = sample_loss_gradient(net, task, 0, 1, false);
    auto params = net.parameters();
    double scale = 0.0;
    for (double g : grad) scale = std::max(scale, std::abs(g));
    const TrainingSample s = task.sample(0);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto f = [&]() {
            net.set_parameters(params);
            return l2_loss(net.forward(s.graph, s.features), s.target);
        };
        const double fd = test::central_difference(f, params[k], 1e-6);
        EXPECT_LE(std::abs(fd - grad[k]), 1e-5 * std::max(std::abs(fd), 1e-3 * scale)) << k;
    }
}

TEST(Train, SingleLayerReachesOracle) {
    // targets from a known weight vector plus noise, so the oracle residual is positive
    ConvConfig conv;
    conv.basis = {BasisSpec{BasisKind::Fourier, 3, FourierVariant::Standard}};
    conv.use_bias = false;
    conv.use_self = false;
    const std::vector<double> theta{0.8, -0.5, 0.3};
    auto samples = random_samples(6, 1, 1, 6);
    Philox rng(77);
    for (auto& s : samples) {
        auto p = ConvLayerParams::zeros(3, 1, 1);
        p.weights = theta;
        s.target = conv_forward(s.graph, s.features, p, conv);
        for (Eigen::Index i = 0; i < s.target.rows(); ++i) s.target(i, 0) += 0.05 * rng.normal();
    }
    const auto oracle = least_squares_oracle(samples, conv, 1, 1);
    NetworkConfig net;
    net.mp_steps = 1;
    net.input_features = {"f"};
    net.output_width = 1;
    net.conv = conv;
    net.activation = Activation::Identity;
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.updates_per_epoch = 1500;
    cfg.batch_size = 6;
    cfg.lr.kind = LrSchedule::Kind::Geometric;
    cfg.lr.initial = 5e-2;
    cfg.lr.final = 1e-4;
    cfg.lr.every = 10;
    const FixedTask task(samples, 1, 1);
    const auto result = train_nnti(task, net, cfg);
    double trained = 0.0;
    for (double l : evaluate_losses(result.network, samples)) trained += l;
    trained /= static_cast<double>(samples.size());
    EXPECT_GE(trained, oracle.residual - 1e-10);
    EXPECT_LE(trained, 1.1 * oracle.residual);
}

TEST(Checkpoint, RoundTripAndHash) {
    test::TempDir dir;
    const Network net = init_network(small_config(12, 3));
    const auto file = dir.path() / "net.sfbc";
    save_checkpoint(file, net);
    const Network back = load_checkpoint(file);
    EXPECT_EQ(back.parameters(), net.parameters());
    EXPECT_EQ(checkpoint_config_hash(file), config_hash(net.config));
    EXPECT_EQ(config_hash(network_config_from_json(network_config_json(net.config))), config_hash(net.config));
    EXPECT_EQ(config_hash(net.config).size(), 16u);
    EXPECT_NE(config_hash(small_config(12, 3)), config_hash(small_config(13, 3)));
}

TEST(Checkpoint, HashIgnoresThreads) {
    auto a = small_config(1);
    auto b = a;
    b.conv.threads = 4;
    EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
    test::TempDir dir;
    const auto file = dir.path() / "net.sfbc";
    save_checkpoint(file, init_network(small_config(1)));
    const auto size = std::filesystem::file_size(file);
    std::filesystem::resize_file(file, size - 9);
    EXPECT_THROW(load_checkpoint(file), CorruptDataError);
    std::ofstream(file, std::ios::trunc) << "garbage";
    EXPECT_THROW(load_checkpoint(file), CorruptDataError);
}

TEST(History, CsvHeader) {
    test::TempDir dir;
    write_history_csv(dir.path() / "h.csv", {{0, 1e-3, 0.5}, {1, 1e-3, 0.25}});
    std::ifstream in(dir.path() / "h.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "update_index,lr,train_loss");
}

}  // namespace
}  // namespace sfbc
