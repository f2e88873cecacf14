#include "sfbc/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "sfbc/error.hpp"

namespace sfbc {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628;  // 1 / sqrt(pi)
constexpr double kBumpScale = 0.38739618954567656;

struct BasisName {
    const char* name;
    BasisKind kind;
    FourierVariant variant;
};

constexpr std::array kBasisNames{
    BasisName{"nearest", BasisKind::NearestNeighbor, FourierVariant::Standard},
    BasisName{"linear", BasisKind::Linear, FourierVariant::Standard},
    BasisName{"cubic_spline", BasisKind::CubicSpline, FourierVariant::Standard},
    BasisName{"quartic_spline", BasisKind::QuarticSpline, FourierVariant::Standard},
    BasisName{"quintic_spline", BasisKind::QuinticSpline, FourierVariant::Standard},
    BasisName{"wendland2", BasisKind::Wendland2, FourierVariant::Standard},
    BasisName{"gaussian", BasisKind::Gaussian, FourierVariant::Standard},
    BasisName{"spiky", BasisKind::Spiky, FourierVariant::Standard},
    BasisName{"bump", BasisKind::Bump, FourierVariant::Standard},
    BasisName{"fourier", BasisKind::Fourier, FourierVariant::Standard},
    BasisName{"fourier:sfbc", BasisKind::Fourier, FourierVariant::SFBC},
    BasisName{"fourier:even", BasisKind::Fourier, FourierVariant::Even},
    BasisName{"fourier:odd", BasisKind::Fourier, FourierVariant::Odd},
    BasisName{"fourier:odd+x", BasisKind::Fourier, FourierVariant::OddPlusX},
    BasisName{"fourier:odd+sgn", BasisKind::Fourier, FourierVariant::OddPlusSgn},
    BasisName{"chebyshev", BasisKind::Chebyshev1, FourierVariant::Standard},
    BasisName{"chebyshev2", BasisKind::Chebyshev2, FourierVariant::Standard},
    BasisName{"dmcf", BasisKind::DMCF, FourierVariant::Standard},
};

// Short names commonly used for the published methods.
constexpr std::array kBasisAliases{
    std::pair<const char*, const char*>{"sfbc", "fourier:sfbc"},
    std::pair<const char*, const char*>{"lincconv", "linear"},
    std::pair<const char*, const char*>{"splineconv", "cubic_spline"},
    std::pair<const char*, const char*>{"nn", "nearest"},
    std::pair<const char*, const char*>{"fourier:standard", "fourier"},
    std::pair<const char*, const char*>{"chebyshev1", "chebyshev"},
};

constexpr std::array kWindowNames{
    std::pair{"none", WindowKind::None},
    std::pair{"linear", WindowKind::Linear},
    std::pair{"parabolic", WindowKind::Parabolic},
    std::pair{"mueller", WindowKind::Mueller},
    std::pair{"spiky", WindowKind::Spiky},
    std::pair{"cubic_spline", WindowKind::CubicSpline},
    std::pair{"quartic_spline", WindowKind::QuarticSpline},
    std::pair{"quintic_spline", WindowKind::QuinticSpline},
};

constexpr std::array kMappingNames{
    std::pair{"identity", MappingKind::Identity},
    std::pair{"polar", MappingKind::Polar},
    std::pair{"preserving", MappingKind::Preserving},
};

constexpr std::array kSymmetryNames{
    std::pair{"standard", SymmetryMode::Standard},
    std::pair{"symmetric", SymmetryMode::Symmetric},
    std::pair{"antisymmetric", SymmetryMode::Antisymmetric},
};

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& name : names) {
        if (!out.empty()) out += ", ";
        out += name;
    }
    return out;
}

inline double pos(double x) { return x > 0.0 ? x : 0.0; }
inline double pow3(double x) { return x * x * x; }
inline double pow4(double x) { return pow3(x) * x; }
inline double pow5(double x) { return pow4(x) * x; }
inline double sgn(double x) { return static_cast<double>((0.0 < x) - (x < 0.0)); }

double cubic_shape(double r) { return pow3(pos(1.0 - r)) - 4.0 * pow3(pos(0.5 - r)); }
double quartic_shape(double r) {
    return pow4(pos(1.0 - r)) - 5.0 * pow4(pos(0.6 - r)) + 10.0 * pow4(pos(0.2 - r));
}
double quintic_shape(double r) {
    return pow5(pos(1.0 - r)) - 6.0 * pow5(pos(2.0 / 3.0 - r)) + 15.0 * pow5(pos(1.0 / 3.0 - r));
}

bool uses_rescaled_centroids(BasisKind kind) {
    switch (kind) {
    case BasisKind::CubicSpline:
    case BasisKind::QuarticSpline:
    case BasisKind::QuinticSpline:
    case BasisKind::Wendland2:
    case BasisKind::Gaussian:
        return true;
    default:
        return false;
    }
}

}  // namespace

BasisSpec parse_basis(std::string_view name, int n) {
    std::string key(name);
    for (const auto& [alias, target] : kBasisAliases) {
        if (key == alias) key = target;
    }
    for (const auto& entry : kBasisNames) {
        if (key == entry.name) {
            if (n < 1) throw ConfigError("basis term count must be >= 1, got " + std::to_string(n));
            return BasisSpec{entry.kind, n, entry.variant};
        }
    }
    throw ConfigError("unknown basis '" + std::string(name) + "'; valid names: " + join_names(basis_names()));
}

std::string basis_name(const BasisSpec& spec) {
    for (const auto& entry : kBasisNames) {
        if (entry.kind == spec.kind && (spec.kind != BasisKind::Fourier || entry.variant == spec.fourier_variant)) {
            return entry.name;
        }
    }
    return "unknown";
}

std::vector<std::string> basis_names() {
    std::vector<std::string> names;
    for (const auto& entry : kBasisNames) names.emplace_back(entry.name);
    for (const auto& [alias, target] : kBasisAliases) names.emplace_back(alias);
    return names;
}

WindowKind parse_window(std::string_view name) {
    for (const auto& [key, kind] : kWindowNames) {
        if (name == key) return kind;
    }
    throw ConfigError("unknown window '" + std::string(name) + "'; valid names: " + join_names(window_names()));
}

std::string window_name(WindowKind kind) {
    for (const auto& [key, value] : kWindowNames) {
        if (value == kind) return key;
    }
    return "unknown";
}

std::vector<std::string> window_names() {
    std::vector<std::string> names;
    for (const auto& entry : kWindowNames) names.emplace_back(entry.first);
    return names;
}

MappingKind parse_mapping(std::string_view name) {
    for (const auto& [key, kind] : kMappingNames) {
        if (name == key) return kind;
    }
    throw ConfigError("unknown mapping '" + std::string(name) + "'; valid names: " + join_names(mapping_names()));
}

std::string mapping_name(MappingKind kind) {
    for (const auto& [key, value] : kMappingNames) {
        if (value == kind) return key;
    }
    return "unknown";
}

std::vector<std::string> mapping_names() {
    std::vector<std::string> names;
    for (const auto& entry : kMappingNames) names.emplace_back(entry.first);
    return names;
}

SymmetryMode parse_symmetry(std::string_view name) {
    for (const auto& [key, mode] : kSymmetryNames) {
        if (name == key) return mode;
    }
    throw ConfigError("unknown symmetry mode '" + std::string(name) + "'; valid: standard, symmetric, antisymmetric");
}

std::string symmetry_name(SymmetryMode mode) {
    for (const auto& [key, value] : kSymmetryNames) {
        if (value == mode) return key;
    }
    return "unknown";
}

std::vector<FourierTerm> select_fourier_terms(FourierVariant variant, int n) {
    using K = FourierTerm::Kind;
    std::vector<FourierTerm> terms;
    terms.reserve(static_cast<std::size_t>(std::max(n, 0)));
    if (n < 1) return terms;

    switch (variant) {
    case FourierVariant::Standard:
        terms.push_back({K::Constant, 0});
        for (int i = 1; i < n; ++i) {
            const int k = (i - 1) / 2 + 1;
            terms.push_back({i % 2 == 1 ? K::Cos : K::Sin, k});
        }
        break;
    case FourierVariant::SFBC:
        if (n <= 3 || n % 2 == 1) return select_fourier_terms(FourierVariant::Standard, n);
        terms.push_back({K::Constant, 0});
        terms.push_back({K::Sin, 1});
        for (int k = 2; static_cast<int>(terms.size()) < n; ++k) {
            terms.push_back({K::Sin, k});
            terms.push_back({K::Cos, k});
        }
        break;
    case FourierVariant::Even:
    case FourierVariant::Odd:
    case FourierVariant::OddPlusX:
    case FourierVariant::OddPlusSgn: {
        const K first = variant == FourierVariant::OddPlusX     ? K::Identity
                        : variant == FourierVariant::OddPlusSgn ? K::Sign
                                                                : K::Constant;
        const K harmonic = variant == FourierVariant::Even ? K::Cos : K::Sin;
        terms.push_back({first, 0});
        for (int k = 1; k < n; ++k) terms.push_back({harmonic, k});
        break;
    }
    }
    return terms;
}

AxisBasis::AxisBasis(const BasisSpec& spec) : spec_(spec) {
    if (spec.n < 1) throw ConfigError("basis term count must be >= 1");
    if (spec_.kind == BasisKind::DMCF) spec_.kind = BasisKind::Linear;

    const int n = spec_.n;
    switch (spec_.kind) {
    case BasisKind::Fourier:
        terms_ = select_fourier_terms(spec_.fourier_variant, n);
        for (const auto& term : terms_) max_harmonic_ = std::max(max_harmonic_, term.harmonic);
        return;
    case BasisKind::Chebyshev1:
    case BasisKind::Chebyshev2:
        return;
    default:
        break;
    }

    centroids_.resize(static_cast<std::size_t>(n));
    spacing_ = n == 1 ? 2.0 : 2.0 / (n - 1);
    const double scale = uses_rescaled_centroids(spec_.kind) ? 1.0 - 2.0 / n : 1.0;
    for (int i = 0; i < n; ++i) {
        const double c = n == 1 ? 0.0 : -1.0 + i * spacing_;
        centroids_[static_cast<std::size_t>(i)] = scale * c;
    }
    normalize_ = spec_.kind == BasisKind::CubicSpline || spec_.kind == BasisKind::QuarticSpline ||
                 spec_.kind == BasisKind::QuinticSpline || spec_.kind == BasisKind::Wendland2;
}

void AxisBasis::evaluate_fourier(double p, std::span<double> out) const {
    double s1 = 0.0;
    double c1 = 1.0;
    if (max_harmonic_ > 0) {
        s1 = std::sin(std::numbers::pi * p);
        c1 = std::cos(std::numbers::pi * p);
    }
    // sin/cos of k*pi*p by angle addition, harmonics 0..max
    std::array<double, 65> sin_small;
    std::array<double, 65> cos_small;
    std::vector<double> sin_large;
    std::vector<double> cos_large;
    double* sn = sin_small.data();
    double* cs = cos_small.data();
    if (max_harmonic_ >= static_cast<int>(sin_small.size())) {
        sin_large.resize(static_cast<std::size_t>(max_harmonic_) + 1);
        cos_large.resize(static_cast<std::size_t>(max_harmonic_) + 1);
        sn = sin_large.data();
        cs = cos_large.data();
    }
    sn[0] = 0.0;
    cs[0] = 1.0;
    for (int k = 1; k <= max_harmonic_; ++k) {
        sn[k] = sn[k - 1] * c1 + cs[k - 1] * s1;
        cs[k] = cs[k - 1] * c1 - sn[k - 1] * s1;
    }

    using K = FourierTerm::Kind;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const auto& term = terms_[i];
        switch (term.kind) {
        case K::Constant: out[i] = 1.0; break;
        case K::Identity: out[i] = p; break;
        case K::Sign: out[i] = sgn(p); break;
        case K::Cos: out[i] = kInvSqrtPi * cs[term.harmonic]; break;
        case K::Sin: out[i] = kInvSqrtPi * sn[term.harmonic]; break;
        }
    }
}

void AxisBasis::evaluate(double q, std::span<double> out) const {
    const std::size_t n = size();
    switch (spec_.kind) {
    case BasisKind::Fourier:
        evaluate_fourier(q, out);
        return;
    case BasisKind::Chebyshev1:
    case BasisKind::Chebyshev2: {
        out[0] = 1.0;
        if (n > 1) out[1] = spec_.kind == BasisKind::Chebyshev1 ? q : 2.0 * q;
        for (std::size_t k = 2; k < n; ++k) out[k] = 2.0 * q * out[k - 1] - out[k - 2];
        return;
    }
    case BasisKind::NearestNeighbor: {
        // one cell per point; cell i owns (c_i - s/2, c_i + s/2]
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
        const double cell = std::ceil((q - centroids_[0]) / spacing_ - 0.5);
        if (cell >= 0.0 && cell < static_cast<double>(n)) out[static_cast<std::size_t>(cell)] = 1.0;
        return;
    }
    default:
        break;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (q - centroids_[i]) / spacing_;
        const double a = std::abs(r);
        double b = 0.0;
        switch (spec_.kind) {
        case BasisKind::Linear: b = pos(1.0 - a); break;
        case BasisKind::CubicSpline: b = cubic_shape(a / 1.732051); break;
        case BasisKind::QuarticSpline: b = quartic_shape(a / 1.936492); break;
        case BasisKind::QuinticSpline: b = quintic_shape(a / 2.121321); break;
        case BasisKind::Wendland2: {
            const double x = a / 1.620185;
            b = pow4(pos(1.0 - x)) * (1.0 + 4.0 * x);
            break;
        }
        case BasisKind::Gaussian: b = std::exp(-r * r); break;
        case BasisKind::Spiky: b = pow3(pos(1.0 - a)); break;
        case BasisKind::Bump: {
            const double x = kBumpScale * a;
            b = x < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
            break;
        }
        default: break;
        }
        out[i] = b;
        total += b;
    }
    if (normalize_ && total > 0.0) {
        for (std::size_t i = 0; i < n; ++i) out[i] /= total;
    }
}

std::vector<double> eval_basis(const BasisSpec& spec, double q) {
    AxisBasis basis(spec);
    std::vector<double> out(basis.size());
    basis.evaluate(q, out);
    return out;
}

double eval_window(WindowKind kind, double r) {
    switch (kind) {
    case WindowKind::None: return r <= 1.0 ? 1.0 : 0.0;
    case WindowKind::Linear: return pos(1.0 - r);
    case WindowKind::Parabolic: return pos(1.0 - r * r);
    case WindowKind::Mueller: return pow3(pos(1.0 - r * r));
    case WindowKind::Spiky: return pow3(pos(1.0 - r));
    case WindowKind::CubicSpline: return cubic_shape(r);
    case WindowKind::QuarticSpline: return quartic_shape(r);
    case WindowKind::QuinticSpline: return quintic_shape(r);
    }
    return 0.0;
}

namespace {

void ball_to_cube(const double in[3], double out[3]) {
    const double x = in[0];
    const double y = in[1];
    const double z = in[2];
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (norm == 0.0) {
        out[0] = out[1] = out[2] = 0.0;
        return;
    }
    // ball -> cylinder
    double cx = 0.0;
    double cy = 0.0;
    double cz = 0.0;
    const double planar = std::sqrt(x * x + y * y);
    if (1.25 * z * z <= x * x + y * y) {
        cx = x * norm / planar;
        cy = y * norm / planar;
        cz = 1.5 * z;
    } else {
        const double f = std::sqrt(3.0 * norm / (norm + std::abs(z)));
        cx = x * f;
        cy = y * f;
        cz = sgn(z) * norm;
    }
    // cylinder -> cube
    const double rho = std::sqrt(cx * cx + cy * cy);
    if (cx == 0.0 && cy == 0.0) {
        out[0] = 0.0;
        out[1] = 0.0;
    } else if (std::abs(cy) <= std::abs(cx)) {
        out[0] = sgn(cx) * rho;
        out[1] = 4.0 / std::numbers::pi * sgn(cx) * rho * std::atan(cy / cx);
    } else {
        out[0] = 4.0 / std::numbers::pi * sgn(cy) * rho * std::atan(cx / cy);
        out[1] = sgn(cy) * rho;
    }
    out[2] = cz;
}

}  // namespace

void map_coords(MappingKind kind, std::span<const double> q, std::span<double> out) {
    const std::size_t d = q.size();
    if (d < 1 || d > 3 || out.size() < d) throw ConfigError("map_coords expects dimension 1, 2 or 3");
    if (kind == MappingKind::Identity || d == 1) {
        std::copy(q.begin(), q.end(), out.begin());
        return;
    }
    if (kind == MappingKind::Polar) {
        double norm2 = 0.0;
        for (double v : q) norm2 += v * v;
        const double norm = std::sqrt(norm2);
        out[0] = 2.0 * norm - 1.0;
        out[1] = std::atan2(q[1], q[0]) / std::numbers::pi;
        if (d == 3) out[2] = norm > 0.0 ? 2.0 * std::acos(std::clamp(q[2] / norm, -1.0, 1.0)) / std::numbers::pi - 1.0 : 0.0;
        return;
    }
    const double in[3] = {q[0], q[1], d == 3 ? q[2] : 0.0};
    double mapped[3];
    ball_to_cube(in, mapped);
    for (std::size_t a = 0; a < d; ++a) out[a] = mapped[a];
}

std::vector<double> map_coords(MappingKind kind, std::span<const double> q) {
    std::vector<double> out(q.size());
    map_coords(kind, q, out);
    return out;
}

BasisTensor::BasisTensor(std::vector<BasisSpec> axes, SymmetryMode mode) : mode_(mode) {
    if (axes.empty() || axes.size() > 3) throw ConfigError("basis tensor needs 1 to 3 axes");
    bool dmcf = false;
    for (const auto& spec : axes) {
        if (spec.kind == BasisKind::DMCF) dmcf = true;
        axes_.emplace_back(spec);
        size_ *= axes_.back().size();
        scratch_ += axes_.back().size();
    }
    if (dmcf) mode_ = SymmetryMode::Antisymmetric;
}

void BasisTensor::evaluate(std::span<const double> q, std::span<double> out, std::span<double> scratch) const {
    const std::size_t d = axes_.size();
    double coords[3] = {0.0, 0.0, 0.0};
    double lead = 1.0;
    for (std::size_t a = 0; a < d; ++a) coords[a] = q[a];
    if (mode_ != SymmetryMode::Standard) {
        const double s = sgn(q[0]);
        coords[0] = 2.0 * std::abs(q[0]) - 1.0;
        for (std::size_t a = 1; a < d; ++a) coords[a] = s * q[a];
        if (mode_ == SymmetryMode::Antisymmetric) lead = s;
    }

    std::size_t offset = 0;
    std::span<double> values[3];
    for (std::size_t a = 0; a < d; ++a) {
        values[a] = scratch.subspan(offset, axes_[a].size());
        axes_[a].evaluate(coords[a], values[a]);
        offset += axes_[a].size();
    }
    for (double& v : values[0]) v *= lead;

    if (d == 1) {
        std::copy(values[0].begin(), values[0].end(), out.begin());
        return;
    }
    if (d == 2) {
        std::size_t k = 0;
        for (double bx : values[0]) {
            for (double by : values[1]) out[k++] = bx * by;
        }
        return;
    }
    std::size_t k = 0;
    for (double bx : values[0]) {
        for (double by : values[1]) {
            const double bxy = bx * by;
            for (double bz : values[2]) out[k++] = bxy * bz;
        }
    }
}

std::vector<double> BasisTensor::evaluate(std::span<const double> q) const {
    std::vector<double> out(size_);
    std::vector<double> scratch(scratch_);
    evaluate(q, out, scratch);
    return out;
}

std::vector<double> basis_tensor(const std::vector<BasisSpec>& axis_specs, std::span<const double> q_mapped,
                                 SymmetryMode mode) {
    return BasisTensor(axis_specs, mode).evaluate(q_mapped);
}

}  // namespace sfbc
