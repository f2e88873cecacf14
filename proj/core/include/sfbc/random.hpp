#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace sfbc {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// The stream is fully determined by (key, counter); draws are portable across platforms
/// because the uniform and normal transforms below are implemented here rather than
/// taken from <random> distributions.
class Philox {
public:
    using result_type = std::uint32_t;

    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint32_t operator()();
    static constexpr std::uint32_t min() { return 0; }
    static constexpr std::uint32_t max() { return 0xFFFFFFFFu; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> buffer_{};
    unsigned used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent child seed, e.g. one per simulation from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Philox& rng);

}  // namespace sfbc
