#include <benchmark/benchmark.h>

#include <string>

#include "sfbc/basis.hpp"
#include "sfbc/convolution.hpp"
#include "sfbc/experiments.hpp"
#include "sfbc/network.hpp"

namespace {

constexpr std::size_t kPerAxis[] = {0, 1024, 32, 10};

sfbc::ConvConfig config_for(const std::string& basis, int n, int dim) {
    sfbc::ConvConfig config;
    config.basis.assign(static_cast<std::size_t>(dim), sfbc::parse_basis(basis, n));
    return config;
}

sfbc::ConvLayerParams params_for(const sfbc::ConvConfig& config, std::size_t in, std::size_t out) {
    auto params = sfbc::ConvLayerParams::zeros(config.term_count(), in, out);
    for (std::size_t k = 0; k < params.weights.size(); ++k) params.weights[k] = 1e-3 * static_cast<double>(k % 17);
    return params;
}

const sfbc::BenchmarkProblem& problem(int dim) {
    static sfbc::BenchmarkProblem problems[4];
    auto& p = problems[dim];
    if (p.graph.node_count == 0) p = sfbc::benchmark_problem(dim, kPerAxis[dim], 0);
    return p;
}

void forward(benchmark::State& state, const std::string& basis) {
    const int n = static_cast<int>(state.range(0));
    const int dim = static_cast<int>(state.range(1));
    const auto& p = problem(dim);
    const auto config = config_for(basis, n, dim);
    sfbc::Matrix features = sfbc::Matrix::Ones(static_cast<Eigen::Index>(p.graph.node_count), 32);
    const auto params = params_for(config, 32, 32);
    for (auto _ : state) benchmark::DoNotOptimize(sfbc::conv_forward(p.graph, features, params, config));
    state.counters["edges"] = static_cast<double>(p.graph.edge_count());
}

void backward(benchmark::State& state, const std::string& basis) {
    const int n = static_cast<int>(state.range(0));
    const int dim = static_cast<int>(state.range(1));
    const auto& p = problem(dim);
    const auto config = config_for(basis, n, dim);
    sfbc::Matrix features = sfbc::Matrix::Ones(static_cast<Eigen::Index>(p.graph.node_count), 32);
    sfbc::Matrix upstream = sfbc::Matrix::Ones(static_cast<Eigen::Index>(p.graph.node_count), 32);
    const auto params = params_for(config, 32, 32);
    for (auto _ : state) benchmark::DoNotOptimize(sfbc::conv_backward(p.graph, features, params, config, upstream));
    state.counters["edges"] = static_cast<double>(p.graph.edge_count());
}

void basis_eval(benchmark::State& state, const std::string& basis) {
    const int n = static_cast<int>(state.range(0));
    const sfbc::AxisBasis axis(sfbc::parse_basis(basis, n));
    std::vector<double> out(axis.size());
    double q = -1.0;
    for (auto _ : state) {
        axis.evaluate(q, out);
        benchmark::DoNotOptimize(out.data());
        q = q > 1.0 ? -1.0 : q + 1e-3;
    }
}

void conv_args(benchmark::internal::Benchmark* b) {
    for (int dim : {1, 2, 3})
        for (int n : {2, 4, 8}) b->Args({n, dim});
    b->ArgNames({"n", "dim"})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK_CAPTURE(forward, sfbc, std::string("sfbc"))->Apply(conv_args);
BENCHMARK_CAPTURE(forward, linear, std::string("linear"))->Apply(conv_args);
BENCHMARK_CAPTURE(forward, dmcf, std::string("dmcf"))->Apply(conv_args);
BENCHMARK_CAPTURE(backward, sfbc, std::string("sfbc"))->Apply(conv_args);
BENCHMARK_CAPTURE(backward, linear, std::string("linear"))->Apply(conv_args);
BENCHMARK_CAPTURE(backward, dmcf, std::string("dmcf"))->Apply(conv_args);
BENCHMARK_CAPTURE(basis_eval, sfbc, std::string("sfbc"))->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK_CAPTURE(basis_eval, linear, std::string("linear"))->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK_CAPTURE(basis_eval, chebyshev, std::string("chebyshev1"))->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

BENCHMARK_MAIN();
