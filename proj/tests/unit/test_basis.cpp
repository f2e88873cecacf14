#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "sfbc/basis.hpp"
#include "sfbc/error.hpp"

namespace sfbc {
namespace {

using K = FourierTerm::Kind;

std::vector<double> gauss_legendre_nodes(int n, std::vector<double>& weights) {
    std::vector<double> x(static_cast<std::size_t>(n));
    weights.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[static_cast<std::size_t>(i)] = z;
        weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return x;
}

TEST(Basis, LinearTwoTermsAtOrigin) {
    const auto b = eval_basis({BasisKind::Linear, 2}, 0.0);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_DOUBLE_EQ(b[0], 0.5);
    EXPECT_DOUBLE_EQ(b[1], 0.5);
}

TEST(Basis, ChebyshevClosedForm) {
    const auto b = eval_basis({BasisKind::Chebyshev1, 3}, 0.5);
    EXPECT_DOUBLE_EQ(b[0], 1.0);
    EXPECT_DOUBLE_EQ(b[1], 0.5);
    EXPECT_DOUBLE_EQ(b[2], -0.5);
}

TEST(Basis, FourierSingleTermIsConstant) {
    const auto b = eval_basis({BasisKind::Fourier, 1, FourierVariant::Standard}, 0.3);
    ASSERT_EQ(b.size(), 1u);
    EXPECT_DOUBLE_EQ(b[0], 1.0);
}

TEST(Basis, NearestNeighborHalfOpenInterval) {
    const auto b = eval_basis({BasisKind::NearestNeighbor, 2}, 0.2);
    EXPECT_EQ(b[0], 0.0);
    EXPECT_EQ(b[1], 1.0);
}

TEST(Basis, FourierScaling) {
    const auto b = eval_basis({BasisKind::Fourier, 3, FourierVariant::Standard}, 0.25);
    const double s = 1.0 / std::sqrt(std::numbers::pi);
    EXPECT_DOUBLE_EQ(b[0], 1.0);
    EXPECT_NEAR(b[1], s * std::cos(std::numbers::pi * 0.25), 1e-15);
    EXPECT_NEAR(b[2], s * std::sin(std::numbers::pi * 0.25), 1e-15);
}

TEST(Basis, NamesRoundTrip) {
    for (const auto& name : basis_names()) {
        const BasisSpec spec = parse_basis(name, 3);
        EXPECT_EQ(parse_basis(basis_name(spec), 3), spec);
    }
    EXPECT_EQ(parse_basis("sfbc", 4), (BasisSpec{BasisKind::Fourier, 4, FourierVariant::SFBC}));
    EXPECT_EQ(parse_window("mueller"), WindowKind::Mueller);
    EXPECT_EQ(parse_mapping("preserving"), MappingKind::Preserving);
    EXPECT_THROW(parse_basis("nonsense", 2), ConfigError);
    EXPECT_THROW(parse_basis("linear", 0), ConfigError);
    EXPECT_THROW(parse_window("round"), ConfigError);
}

TEST(Basis, UnknownNameListsValidNames) {
    try {
        parse_basis("nonsense", 2);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("fourier:sfbc"), std::string::npos);
    }
}

TEST(FourierTerms, StandardFive) {
    const std::vector<FourierTerm> expected{{K::Constant, 0}, {K::Cos, 1}, {K::Sin, 1}, {K::Cos, 2}, {K::Sin, 2}};
    EXPECT_EQ(select_fourier_terms(FourierVariant::Standard, 5), expected);
}

TEST(FourierTerms, SfbcFour) {
    const std::vector<FourierTerm> expected{{K::Constant, 0}, {K::Sin, 1}, {K::Sin, 2}, {K::Cos, 2}};
    EXPECT_EQ(select_fourier_terms(FourierVariant::SFBC, 4), expected);
}

TEST(FourierTerms, SfbcSmallAndOddMatchStandard) {
    for (int n : {1, 2, 3, 5, 7})
        EXPECT_EQ(select_fourier_terms(FourierVariant::SFBC, n), select_fourier_terms(FourierVariant::Standard, n));
    const std::vector<FourierTerm> six{{K::Constant, 0}, {K::Sin, 1}, {K::Sin, 2},
                                       {K::Cos, 2},      {K::Sin, 3}, {K::Cos, 3}};
    EXPECT_EQ(select_fourier_terms(FourierVariant::SFBC, 6), six);
}

TEST(FourierTerms, OddTwo) {
    const std::vector<FourierTerm> expected{{K::Constant, 0}, {K::Sin, 1}};
    EXPECT_EQ(select_fourier_terms(FourierVariant::Odd, 2), expected);
}

TEST(FourierTerms, VariantsReplaceConstant) {
    EXPECT_EQ(select_fourier_terms(FourierVariant::OddPlusX, 3)[0].kind, K::Identity);
    EXPECT_EQ(select_fourier_terms(FourierVariant::OddPlusSgn, 3)[0].kind, K::Sign);
    for (const auto& t : select_fourier_terms(FourierVariant::Even, 6)) EXPECT_NE(t.kind, K::Sin);
}

TEST(Window, Examples) {
    EXPECT_DOUBLE_EQ(eval_window(WindowKind::Mueller, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(eval_window(WindowKind::Mueller, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(eval_window(WindowKind::Spiky, 0.5), 0.125);
    EXPECT_DOUBLE_EQ(eval_window(WindowKind::None, 0.7), 1.0);
}

TEST(Window, CompactAndFlatAtSupport) {
    for (const auto& name : window_names()) {
        const WindowKind kind = parse_window(name);
        if (kind == WindowKind::None) continue;
        for (double r : {1.0, 1.0 + 1e-12, 1.3, 2.0, 10.0}) EXPECT_EQ(eval_window(kind, r), 0.0) << name;
    }
    for (WindowKind kind : {WindowKind::Mueller, WindowKind::CubicSpline, WindowKind::QuarticSpline,
                            WindowKind::QuinticSpline, WindowKind::Parabolic}) {
        const double h1 = 1e-3, h2 = 1e-4;
        const double s1 = std::abs(eval_window(kind, 1.0 - h1) / h1);
        const double s2 = std::abs(eval_window(kind, 1.0 - h2) / h2);
        if (kind == WindowKind::Parabolic) {
            EXPECT_NEAR(s2, 2.0, 1e-3);
        } else {
            EXPECT_LT(s2, s1);
            EXPECT_LT(s2, 1e-3);
        }
    }
}

TEST(Mapping, Examples) {
    const std::vector<double> q{0.3, -0.2};
    EXPECT_EQ(map_coords(MappingKind::Identity, q), q);
    const auto polar = map_coords(MappingKind::Polar, std::vector<double>{1.0, 0.0});
    EXPECT_DOUBLE_EQ(polar[0], 1.0);
    EXPECT_DOUBLE_EQ(polar[1], 0.0);
    const auto origin = map_coords(MappingKind::Preserving, std::vector<double>{0.0, 0.0, 0.0});
    EXPECT_EQ(origin, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Mapping, UnitBallIntoCube) {
    Philox rng(3);
    for (int dim : {1, 2, 3}) {
        for (int s = 0; s < 2000; ++s) {
            std::vector<double> q(static_cast<std::size_t>(dim));
            double r2 = 0.0;
            for (double& v : q) {
                v = rng.uniform(-1.0, 1.0);
                r2 += v * v;
            }
            if (r2 > 1.0) continue;
            for (MappingKind kind : {MappingKind::Identity, MappingKind::Polar, MappingKind::Preserving}) {
                for (double v : map_coords(kind, q)) {
                    EXPECT_LE(v, 1.0 + 1e-12);
                    EXPECT_GE(v, -1.0 - 1e-12);
                }
            }
        }
    }
}

TEST(Mapping, PreservingSendsSphereToCubeSurface) {
    Philox rng(4);
    for (int s = 0; s < 500; ++s) {
        double q[3];
        double r2 = 0.0;
        for (double& v : q) {
            v = rng.normal();
            r2 += v * v;
        }
        for (double& v : q) v /= std::sqrt(r2);
        const auto m = map_coords(MappingKind::Preserving, std::span<const double>(q, 3));
        const double inf = std::max({std::abs(m[0]), std::abs(m[1]), std::abs(m[2])});
        EXPECT_NEAR(inf, 1.0, 1e-12);
    }
}

TEST(Tensor, LinearProductAtOrigin) {
    const std::vector<BasisSpec> axes(2, BasisSpec{BasisKind::Linear, 2});
    const auto t = basis_tensor(axes, std::vector<double>{0.0, 0.0}, SymmetryMode::Standard);
    ASSERT_EQ(t.size(), 4u);
    for (double v : t) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Tensor, FourierAtOrigin) {
    const std::vector<BasisSpec> axes(2, BasisSpec{BasisKind::Fourier, 3, FourierVariant::Standard});
    const auto t = basis_tensor(axes, std::vector<double>{0.0, 0.0}, SymmetryMode::Standard);
    ASSERT_EQ(t.size(), 9u);
    EXPECT_DOUBLE_EQ(t[0], 1.0);
    // index 2 is the sine on the second axis, 2 * 3 the sine on the first
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(t[2 + 3 * k], 0.0);
        EXPECT_EQ(t[6 + k], 0.0);
    }
}

TEST(Tensor, FirstAxisSlowest) {
    const std::vector<BasisSpec> axes{{BasisKind::Chebyshev1, 2}, {BasisKind::Chebyshev1, 3}};
    const auto t = basis_tensor(axes, std::vector<double>{0.5, 0.25}, SymmetryMode::Standard);
    const double bx[2] = {1.0, 0.5};
    const double by[3] = {1.0, 0.25, 2 * 0.25 * 0.25 - 1};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(t[static_cast<std::size_t>(i * 3 + j)], bx[i] * by[j]);
}

TEST(Tensor, DmcfIsLinearAntisymmetric) {
    const std::vector<BasisSpec> dm(2, BasisSpec{BasisKind::DMCF, 3});
    const std::vector<BasisSpec> lin(2, BasisSpec{BasisKind::Linear, 3});
    const std::vector<double> q{0.4, -0.3};
    EXPECT_EQ(basis_tensor(dm, q, SymmetryMode::Standard), basis_tensor(lin, q, SymmetryMode::Antisymmetric));
}

class PartitionOfUnity : public ::testing::TestWithParam<BasisKind> {};

TEST_P(PartitionOfUnity, DenseGrid) {
    const BasisKind kind = GetParam();
    const bool exact = kind == BasisKind::NearestNeighbor || kind == BasisKind::Linear;
    for (int n = 2; n <= 8; ++n) {
        double worst = 0.0;
        for (int k = 0; k <= 4000; ++k) {
            const double q = -1.0 + 2.0 * k / 4000.0;
            double sum = 0.0;
            for (double v : eval_basis({kind, n}, q)) sum += v;
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        EXPECT_LE(worst, exact ? 1e-14 : 1e-2) << "n=" << n;
    }
}

INSTANTIATE_TEST_SUITE_P(Interpolating, PartitionOfUnity,
                         ::testing::Values(BasisKind::NearestNeighbor, BasisKind::Linear, BasisKind::CubicSpline,
                                           BasisKind::QuarticSpline, BasisKind::QuinticSpline, BasisKind::Wendland2));

TEST(Orthogonality, FourierGram) {
    std::vector<double> w;
    const auto x = gauss_legendre_nodes(96, w);
    for (int n : {4, 9, 16}) {
        const BasisSpec spec{BasisKind::Fourier, n, FourierVariant::Standard};
        std::vector<std::vector<double>> values;
        for (double xi : x) values.push_back(eval_basis(spec, xi));
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                double g = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k) g += w[k] * values[k][a] * values[k][b];
                EXPECT_LE(std::abs(g), 1e-8) << a << "," << b;
            }
    }
}

TEST(Orthogonality, ChebyshevGram) {
    // Gauss-Chebyshev quadrature integrates against 1/sqrt(1-x^2) exactly for polynomials up to degree 2m-1
    const int m = 64;
    const BasisSpec spec{BasisKind::Chebyshev1, 12};
    std::vector<std::vector<double>> values;
    for (int k = 0; k < m; ++k) values.push_back(eval_basis(spec, std::cos(std::numbers::pi * (k + 0.5) / m)));
    for (int a = 0; a < 12; ++a)
        for (int b = 0; b < 12; ++b) {
            double g = 0.0;
            for (int k = 0; k < m; ++k) g += std::numbers::pi / m * values[k][a] * values[k][b];
            if (a == b)
                EXPECT_NEAR(g, a == 0 ? std::numbers::pi : std::numbers::pi / 2, 1e-12);
            else
                EXPECT_LE(std::abs(g), 1e-8);
        }
}

TEST(Orthogonality, TensorGram2D) {
    std::vector<double> w;
    const auto x = gauss_legendre_nodes(48, w);
    const std::vector<BasisSpec> axes(2, BasisSpec{BasisKind::Fourier, 5, FourierVariant::Standard});
    const BasisTensor tensor(axes, SymmetryMode::Standard);
    const std::size_t terms = tensor.size();
    Matrix gram = Matrix::Zero(static_cast<Eigen::Index>(terms), static_cast<Eigen::Index>(terms));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) {
            const auto t = tensor.evaluate(std::vector<double>{x[i], x[j]});
            for (std::size_t a = 0; a < terms; ++a)
                for (std::size_t b = 0; b < terms; ++b)
                    gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += w[i] * w[j] * t[a] * t[b];
        }
    for (Eigen::Index a = 0; a < gram.rows(); ++a)
        for (Eigen::Index b = 0; b < gram.cols(); ++b)
            if (a != b) EXPECT_LE(std::abs(gram(a, b)), 1e-8);
}

struct SymmetryCase {
    BasisSpec spec;
    int dim;
};

class SymmetryConstruction : public ::testing::TestWithParam<SymmetryCase> {};

TEST_P(SymmetryConstruction, SignFlip) {
    const auto [spec, dim] = GetParam();
    const std::vector<BasisSpec> axes(static_cast<std::size_t>(dim), spec);
    const BasisTensor anti(axes, SymmetryMode::Antisymmetric);
    const BasisTensor sym(axes, SymmetryMode::Symmetric);
    Philox rng(11);
    std::vector<double> theta(anti.size());
    for (int s = 0; s < 1000; ++s) {
        test::randomize(theta, rng);
        std::vector<double> q(static_cast<std::size_t>(dim)), mq(q.size());
        for (std::size_t a = 0; a < q.size(); ++a) {
            q[a] = rng.uniform(-1.0, 1.0);
            mq[a] = -q[a];
        }
        auto dot = [&](const BasisTensor& t, const std::vector<double>& p) {
            const auto v = t.evaluate(p);
            double out = 0.0, mag = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) {
                out += v[k] * theta[k];
                mag += std::abs(v[k] * theta[k]);
            }
            return std::pair{out, mag};
        };
        const auto [ga, ma] = dot(anti, q);
        const auto [gam, mam] = dot(anti, mq);
        EXPECT_LE(std::abs(ga + gam), 1e-12 * std::max({ma, mam, 1e-300}));
        const auto [gs, ms] = dot(sym, q);
        const auto [gsm, msm] = dot(sym, mq);
        EXPECT_LE(std::abs(gs - gsm), 1e-12 * std::max({ms, msm, 1e-300}));
    }
}

INSTANTIATE_TEST_SUITE_P(
    Kinds, SymmetryConstruction,
    ::testing::Values(SymmetryCase{{BasisKind::Linear, 4}, 1}, SymmetryCase{{BasisKind::Linear, 4}, 2},
                      SymmetryCase{{BasisKind::Fourier, 5, FourierVariant::Standard}, 2},
                      SymmetryCase{{BasisKind::Fourier, 4, FourierVariant::SFBC}, 3},
                      SymmetryCase{{BasisKind::CubicSpline, 6}, 3}, SymmetryCase{{BasisKind::Chebyshev1, 5}, 2},
                      SymmetryCase{{BasisKind::Gaussian, 3}, 1}, SymmetryCase{{BasisKind::NearestNeighbor, 3}, 2}));

TEST(Basis, Deterministic) {
    const BasisSpec spec{BasisKind::QuinticSpline, 7};
    for (double q : {-0.9, -0.1, 0.33, 0.999}) EXPECT_EQ(eval_basis(spec, q), eval_basis(spec, q));
}

}  // namespace
}  // namespace sfbc
