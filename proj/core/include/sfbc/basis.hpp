#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sfbc {

enum class BasisKind {
    NearestNeighbor,
    Linear,
    CubicSpline,
    QuarticSpline,
    QuinticSpline,
    Wendland2,
    Gaussian,
    Spiky,
    Bump,
    Fourier,
    Chebyshev1,
    Chebyshev2,
    DMCF,
};

enum class FourierVariant { Standard, SFBC, Even, Odd, OddPlusX, OddPlusSgn };

enum class WindowKind { None, Linear, Parabolic, Mueller, Spiky, CubicSpline, QuarticSpline, QuinticSpline };

enum class MappingKind { Identity, Polar, Preserving };

enum class SymmetryMode { Standard, Symmetric, Antisymmetric };

struct BasisSpec {
    BasisKind kind = BasisKind::Linear;
    int n = 2;
    FourierVariant fourier_variant = FourierVariant::Standard;

    bool operator==(const BasisSpec&) const = default;
};

/// One entry of a Fourier-family term list.
struct FourierTerm {
    enum class Kind { Constant, Cos, Sin, Identity, Sign };
    Kind kind = Kind::Constant;
    int harmonic = 0;

    bool operator==(const FourierTerm&) const = default;
};

// Stable lowercase names ("linear", "fourier:sfbc", "mueller", "preserving", ...).
BasisSpec parse_basis(std::string_view name, int n);
std::string basis_name(const BasisSpec& spec);
std::vector<std::string> basis_names();
WindowKind parse_window(std::string_view name);
std::string window_name(WindowKind kind);
std::vector<std::string> window_names();
MappingKind parse_mapping(std::string_view name);
std::string mapping_name(MappingKind kind);
std::vector<std::string> mapping_names();
SymmetryMode parse_symmetry(std::string_view name);
std::string symmetry_name(SymmetryMode mode);

std::vector<FourierTerm> select_fourier_terms(FourierVariant variant, int n);

/// Precomputed 1D basis family; evaluate() is allocation free.
class AxisBasis {
public:
    explicit AxisBasis(const BasisSpec& spec);

    std::size_t size() const noexcept { return static_cast<std::size_t>(spec_.n); }
    const BasisSpec& spec() const noexcept { return spec_; }
    void evaluate(double q, std::span<double> out) const;

private:
    void evaluate_fourier(double q, std::span<double> out) const;

    BasisSpec spec_;
    std::vector<double> centroids_;
    double spacing_ = 2.0;
    bool normalize_ = false;
    std::vector<FourierTerm> terms_;
    int max_harmonic_ = 0;
};

std::vector<double> eval_basis(const BasisSpec& spec, double q);

double eval_window(WindowKind kind, double r);

void map_coords(MappingKind kind, std::span<const double> q, std::span<double> out);
std::vector<double> map_coords(MappingKind kind, std::span<const double> q);

/// Separable tensor product of per-axis bases with optional (anti)symmetric construction.
/// Entries are flattened row-major with the first axis slowest.
class BasisTensor {
public:
    BasisTensor(std::vector<BasisSpec> axes, SymmetryMode mode);

    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    std::size_t size() const noexcept { return size_; }
    std::size_t scratch_size() const noexcept { return scratch_; }
    SymmetryMode mode() const noexcept { return mode_; }

    void evaluate(std::span<const double> q, std::span<double> out, std::span<double> scratch) const;
    std::vector<double> evaluate(std::span<const double> q) const;

private:
    std::vector<AxisBasis> axes_;
    SymmetryMode mode_;
    std::size_t size_ = 1;
    std::size_t scratch_ = 0;
};

std::vector<double> basis_tensor(const std::vector<BasisSpec>& axis_specs, std::span<const double> q_mapped,
                                 SymmetryMode mode);

}  // namespace sfbc
