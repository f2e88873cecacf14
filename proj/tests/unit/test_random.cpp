#include <gtest/gtest.h>

#include <numeric>

#include "sfbc/random.hpp"

namespace sfbc {
namespace {

TEST(Philox, KnownAnswer) {
    // Random123 known-answer vector for philox4x32-10 with zero counter and key
    const auto out = Philox::block({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, DeterministicStreams) {
    Philox a(7), b(7), c(7, 1), d(8);
    bool differs_stream = false, differs_seed = false;
    for (int k = 0; k < 100; ++k) {
        const auto x = a();
        EXPECT_EQ(x, b());
        differs_stream |= x != c();
        differs_seed |= x != d();
    }
    EXPECT_TRUE(differs_stream);
    EXPECT_TRUE(differs_seed);
}

TEST(Philox, UniformMoments) {
    Philox rng(1);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.005);
    EXPECT_NEAR(sq / n - 0.25, 1.0 / 12.0, 0.005);
}

TEST(Philox, NormalMoments) {
    Philox rng(2);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Philox, BelowStaysInRange) {
    Philox rng(3);
    std::vector<int> counts(7, 0);
    for (int k = 0; k < 70000; ++k) {
        const auto v = rng.below(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Permutation, IsPermutation) {
    Philox rng(4);
    auto p = permutation(100, rng);
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(100);
    std::iota(iota.begin(), iota.end(), 0);
    EXPECT_EQ(sorted, iota);
    EXPECT_NE(p, iota);
    Philox again(4);
    EXPECT_EQ(permutation(100, again), p);
}

TEST(DeriveSeed, DistinctChildren) {
    EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
    EXPECT_NE(derive_seed(0, 1), derive_seed(1, 0));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

}  // namespace
}  // namespace sfbc
