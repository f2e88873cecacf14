#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sfbc/convolution.hpp"
#include "sfbc/random.hpp"

namespace sfbc::test {

/// Random graph with `edges` edges in dimension `dim`; displacements inside the unit ball, targets sorted.
inline ParticleGraph random_graph(std::size_t nodes, std::size_t edges, int dim, std::uint64_t seed) {
    Philox rng(seed, 7);
    ParticleGraph g;
    g.node_count = nodes;
    g.dim = dim;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    while (pairs.size() < edges) {
        const auto i = static_cast<std::uint32_t>(rng.below(nodes));
        const auto j = static_cast<std::uint32_t>(rng.below(nodes));
        if (i != j) pairs.emplace_back(i, j);
    }
    std::sort(pairs.begin(), pairs.end(), [](auto a, auto b) { return a.first < b.first; });
    for (auto [i, j] : pairs) {
        g.targets.push_back(i);
        g.sources.push_back(j);
        double q[3];
        double r2 = 0.0;
        do {
            r2 = 0.0;
            for (int a = 0; a < dim; ++a) {
                q[a] = rng.uniform(-1.0, 1.0);
                r2 += q[a] * q[a];
            }
        } while (r2 > 1.0 || r2 < 1e-6);
        for (int a = 0; a < dim; ++a) g.displacement.push_back(q[a]);
        g.distance.push_back(std::sqrt(r2));
    }
    return g;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Philox& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

inline void randomize(std::vector<double>& v, Philox& rng, double scale = 1.0) {
    for (double& x : v) x = rng.uniform(-scale, scale);
}

/// Central difference of f along parameter k.
inline double central_difference(const std::function<double()>& f, double& parameter, double step) {
    const double saved = parameter;
    parameter = saved + step;
    const double plus = f();
    parameter = saved - step;
    const double minus = f();
    parameter = saved;
    return (plus - minus) / (2.0 * step);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() /
                ("sfbc_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->test_suite_name() + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name() + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    static int& counter() {
        static int value = 0;
        return value;
    }
    std::filesystem::path path_;
};

}  // namespace sfbc::test
