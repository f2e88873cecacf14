#include "sfbc/sph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sfbc/error.hpp"

namespace sfbc {

void ParticleState::validate() const {
    const std::size_t n = areas.size();
    const auto d = static_cast<std::size_t>(dim());
    if (n == 0) throw ConfigError("particle state is empty");
    if (dim() < 1 || dim() > 3) throw ConfigError("particle state dimension must be 1, 2 or 3");
    if (positions.size() != n * d) throw ConfigError("position array length does not match particle count");
    if (!velocities.empty() && velocities.size() != n * d) throw ConfigError("velocity array length mismatch");
    if (!masses.empty() && masses.size() != n) throw ConfigError("mass array length mismatch");
    if (!densities.empty() && densities.size() != n) throw ConfigError("density array length mismatch");
    if (!(support > 0.0)) throw ConfigError("support radius must be positive");
}

double KernelSpec::sigma() const {
    switch (dim) {
    case 1: return 4.0 / 3.0;
    case 2: return 40.0 / (7.0 * std::numbers::pi);
    case 3: return 8.0 / std::numbers::pi;
    default: throw ConfigError("kernel dimension must be 1, 2 or 3");
    }
}

namespace {

/// Kernel with the h-dependent scale factors hoisted out of inner loops.
struct ScaledKernel {
    double value_scale;
    double derivative_scale;

    ScaledKernel(const KernelSpec& spec, double h)
        : value_scale(spec.sigma() / std::pow(h, spec.dim)), derivative_scale(value_scale / h) {}

    double value(double q) const {
        if (q <= 0.5) return value_scale * (6.0 * q * q * q - 6.0 * q * q + 1.0);
        if (q < 1.0) {
            const double t = 1.0 - q;
            return value_scale * 2.0 * t * t * t;
        }
        return 0.0;
    }
    double derivative(double q) const {
        if (q <= 0.5) return derivative_scale * (18.0 * q * q - 12.0 * q);
        if (q < 1.0) {
            const double t = 1.0 - q;
            return derivative_scale * -6.0 * t * t;
        }
        return 0.0;
    }
};

}  // namespace

double kernel_value(const KernelSpec& spec, double q, double h) { return ScaledKernel(spec, h).value(q); }

double kernel_derivative(const KernelSpec& spec, double q, double h) { return ScaledKernel(spec, h).derivative(q); }

std::vector<double> kernel_gradient(const KernelSpec& spec, std::span<const double> displacement, double h) {
    std::vector<double> out(displacement.size(), 0.0);
    double r2 = 0.0;
    for (double v : displacement) r2 += v * v;
    const double r = std::sqrt(r2);
    if (r == 0.0) return out;
    const double dw = kernel_derivative(spec, r / h, h);
    for (std::size_t a = 0; a < displacement.size(); ++a) out[a] = dw * displacement[a] / r;
    return out;
}

void min_image(const Domain& domain, const double* xi, const double* xj, double* out) {
    for (int a = 0; a < domain.dim; ++a) {
        double d = xi[a] - xj[a];
        if (domain.periodic[static_cast<std::size_t>(a)]) {
            const double length = domain.length(a);
            d -= length * std::round(d / length);
        }
        out[a] = d;
    }
}

namespace {

/// Positions folded into the primary periodic image so that minimum-image differences need
/// at most one shift of the box length.
std::vector<double> wrap_positions(const Domain& domain, std::span<const double> x) {
    const int d = domain.dim;
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const int a = static_cast<int>(k % static_cast<std::size_t>(d));
        if (!domain.periodic[static_cast<std::size_t>(a)]) continue;
        const double lo = domain.lo[static_cast<std::size_t>(a)];
        const double length = domain.length(a);
        out[k] -= length * std::floor((out[k] - lo) / length);
    }
    return out;
}

/// Appends edge (i, j) if the minimum-image distance of wrapped positions is below h.
inline void try_edge(const Domain& domain, const std::vector<double>& w, double h, std::size_t i, std::size_t j,
                     ParticleGraph& graph) {
    const int d = domain.dim;
    double disp[3];
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
        double delta = w[i * d + a] - w[j * d + a];
        if (domain.periodic[static_cast<std::size_t>(a)]) {
            const double length = domain.length(a);
            if (delta > 0.5 * length) {
                delta -= length;
            } else if (delta < -0.5 * length) {
                delta += length;
            }
        }
        disp[a] = delta;
        r2 += delta * delta;
    }
    const double r = std::sqrt(r2);
    if (!(r < h)) return;
    graph.targets.push_back(static_cast<std::uint32_t>(i));
    graph.sources.push_back(static_cast<std::uint32_t>(j));
    for (int a = 0; a < d; ++a) graph.displacement.push_back(disp[a] / h);
    graph.distance.push_back(r / h);
}

ParticleGraph empty_graph(int dim, std::size_t n) {
    ParticleGraph graph;
    graph.dim = dim;
    graph.node_count = n;
    return graph;
}

}  // namespace

ParticleGraph neighbor_search_brute_force(const Domain& domain, std::span<const double> x, double h) {
    const int d = domain.dim;
    const std::size_t n = x.size() / static_cast<std::size_t>(d);
    ParticleGraph graph = empty_graph(d, n);
    const std::vector<double> w = wrap_positions(domain, x);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) try_edge(domain, w, h, i, j, graph);
        }
    }
    return graph;
}

ParticleGraph neighbor_search(const Domain& domain, std::span<const double> x, double h) {
    const int d = domain.dim;
    const std::size_t n = x.size() / static_cast<std::size_t>(d);
    ParticleGraph graph = empty_graph(d, n);
    if (n == 0) return graph;
    const std::vector<double> w = wrap_positions(domain, x);
    const std::size_t expected = n * (d == 1 ? 10 : (d == 2 ? 30 : 40));
    graph.targets.reserve(expected);
    graph.sources.reserve(expected);
    graph.distance.reserve(expected);
    graph.displacement.reserve(expected * static_cast<std::size_t>(d));

    std::array<std::size_t, 3> cells{1, 1, 1};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    for (int a = 0; a < d; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        if (domain.periodic[ua]) {
            origin[ua] = domain.lo[ua];
            extent[ua] = domain.length(a);
        } else {
            double lo = x[ua];
            double hi = x[ua];
            for (std::size_t i = 0; i < n; ++i) {
                lo = std::min(lo, x[i * d + ua]);
                hi = std::max(hi, x[i * d + ua]);
            }
            origin[ua] = lo;
            extent[ua] = std::max(hi - lo, h);
        }
        cells[ua] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(extent[ua] / h)));
    }

    auto cell_coord = [&](std::size_t i, int a) {
        const auto ua = static_cast<std::size_t>(a);
        double u = (w[i * d + ua] - origin[ua]) / extent[ua];
        if (domain.periodic[ua]) u -= std::floor(u);
        auto c = static_cast<std::ptrdiff_t>(std::floor(u * static_cast<double>(cells[ua])));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(cells[ua]) - 1));
    };
    const std::size_t total_cells = cells[0] * cells[1] * cells[2];
    std::vector<std::size_t> cell_of(n);
    std::vector<std::size_t> start(total_cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        for (int a = 0; a < d; ++a) c = c * cells[static_cast<std::size_t>(a)] + cell_coord(i, a);
        cell_of[i] = c;
        ++start[c + 1];
    }
    for (std::size_t c = 0; c < total_cells; ++c) start[c + 1] += start[c];
    std::vector<std::size_t> members(n);
    {
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < n; ++i) members[fill[cell_of[i]]++] = i;
    }

    std::vector<std::size_t> stencil;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        std::array<std::ptrdiff_t, 3> home{0, 0, 0};
        {
            std::size_t c = cell_of[i];
            for (int a = d - 1; a >= 0; --a) {
                const auto ua = static_cast<std::size_t>(a);
                home[ua] = static_cast<std::ptrdiff_t>(c % cells[ua]);
                c /= cells[ua];
            }
        }
        stencil.clear();
        const int span = d == 1 ? 3 : (d == 2 ? 9 : 27);
        for (int s = 0; s < span; ++s) {
            int code = s;
            std::size_t c = 0;
            bool valid = true;
            for (int a = 0; a < d; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                const int off = code % 3 - 1;
                code /= 3;
                auto k = home[ua] + off;
                const auto count = static_cast<std::ptrdiff_t>(cells[ua]);
                if (domain.periodic[ua]) {
                    k = ((k % count) + count) % count;
                } else if (k < 0 || k >= count) {
                    valid = false;
                }
                c = c * cells[ua] + static_cast<std::size_t>(std::max<std::ptrdiff_t>(k, 0));
            }
            if (valid) stencil.push_back(c);
        }
        std::sort(stencil.begin(), stencil.end());
        stencil.erase(std::unique(stencil.begin(), stencil.end()), stencil.end());
        candidates.clear();
        for (std::size_t c : stencil) {
            for (std::size_t k = start[c]; k < start[c + 1]; ++k) {
                if (members[k] != i) candidates.push_back(members[k]);
            }
        }
        std::sort(candidates.begin(), candidates.end());
        for (std::size_t j : candidates) try_edge(domain, w, h, i, j, graph);
    }
    return graph;
}

ParticleGraph neighbor_search(const ParticleState& state) {
    return neighbor_search(state.domain, state.positions, state.support);
}

ParticleGraph neighbor_search_brute_force(const ParticleState& state) {
    return neighbor_search_brute_force(state.domain, state.positions, state.support);
}

namespace {

std::vector<double> self_plus_neighbors(const ParticleState& state, const ParticleGraph& graph,
                                        std::span<const double> weights) {
    const ScaledKernel kernel(KernelSpec{state.dim()}, state.support);
    const double w0 = kernel.value(0.0);
    std::vector<double> out(state.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = weights[i] * w0;
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
        out[graph.targets[e]] += weights[graph.sources[e]] * kernel.value(graph.distance[e]);
    }
    return out;
}

}  // namespace

std::vector<double> number_density(const ParticleState& state, const ParticleGraph& graph) {
    return self_plus_neighbors(state, graph, state.areas);
}

std::vector<double> summation_density(const ParticleState& state, const ParticleGraph& graph) {
    return self_plus_neighbors(state, graph, state.masses);
}

std::vector<double> weighted_kernel_gradient(const ParticleState& state, const ParticleGraph& graph,
                                             std::span<const double> weights) {
    const ScaledKernel kernel(KernelSpec{state.dim()}, state.support);
    const int d = state.dim();
    std::vector<double> out(state.size() * static_cast<std::size_t>(d), 0.0);
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
        const double r = graph.distance[e];
        if (r == 0.0) continue;
        // displacement is normalized by h, so x_ij / |x_ij| = q / r
        const double coeff = weights[graph.sources[e]] * kernel.derivative(r) / r;
        for (int a = 0; a < d; ++a) out[graph.targets[e] * d + a] += coeff * graph.displacement[e * d + a];
    }
    return out;
}

std::vector<double> naive_gradient(const ParticleState& state, const ParticleGraph& graph,
                                   std::span<const double> quantity) {
    std::vector<double> weights(state.size());
    for (std::size_t j = 0; j < weights.size(); ++j) weights[j] = quantity[j] * state.masses[j] / state.densities[j];
    return weighted_kernel_gradient(state, graph, weights);
}

std::vector<double> accelerations(const ParticleState& state, const ParticleGraph& graph, const SimConfig1D& config) {
    const ScaledKernel kernel(KernelSpec{state.dim()}, state.support);
    const int d = state.dim();
    const double h = state.support;
    const std::size_t n = state.size();
    std::vector<double> p_over_rho2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double rho = state.densities[i];
        if (!(rho > 0.0)) throw SimulationFault("non-positive density at particle " + std::to_string(i), 0);
        p_over_rho2[i] = config.stiffness * (rho - config.rest_density) / (rho * rho);
    }
    std::vector<double> out(n * static_cast<std::size_t>(d), 0.0);
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
        const std::size_t i = graph.targets[e];
        const std::size_t j = graph.sources[e];
        const double r = graph.distance[e];
        if (r == 0.0) continue;
        double vx = 0.0;
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double xij = graph.displacement[e * d + a] * h;
            vx += (state.velocities[i * d + a] - state.velocities[j * d + a]) * xij;
            r2 += xij * xij;
        }
        double visc = 0.0;
        if (vx < 0.0) {
            const double mu = h * vx / (r2 + 0.01 * h * h);
            const double rho_bar = 0.5 * (state.densities[i] + state.densities[j]);
            visc = (-config.alpha * config.sound_speed * mu + config.beta * mu * mu) / rho_bar;
        }
        const double coeff = -state.masses[j] * (p_over_rho2[i] + p_over_rho2[j] + visc) * kernel.derivative(r) / r;
        for (int a = 0; a < d; ++a) out[i * d + a] += coeff * graph.displacement[e * d + a];
    }
    return out;
}

ParticleGraph update_densities(ParticleState& state) {
    ParticleGraph graph = neighbor_search(state);
    state.densities = summation_density(state, graph);
    return graph;
}

namespace {

void check_finite(const ParticleState& state, std::size_t step) {
    for (double v : state.positions) {
        if (!std::isfinite(v)) throw SimulationFault("non-finite position", step);
    }
    for (double v : state.velocities) {
        if (!std::isfinite(v)) throw SimulationFault("non-finite velocity", step);
    }
    for (double v : state.densities) {
        if (!(v > 0.0) || !std::isfinite(v)) throw SimulationFault("non-positive or non-finite density", step);
    }
}

}  // namespace

void rk4_step(ParticleState& state, const AccelerationFn& acceleration, double dt) {
    const std::size_t m = state.positions.size();
    const std::vector<double> x0 = state.positions;
    const std::vector<double> v0 = state.velocities;
    std::vector<double> sum_x(m, 0.0);
    std::vector<double> sum_v(m, 0.0);
    ParticleState stage = state;
    const double weights[4] = {1.0, 2.0, 2.0, 1.0};
    const double offsets[4] = {0.0, 0.5, 0.5, 1.0};
    std::vector<double> kx = v0;
    std::vector<double> kv(m, 0.0);
    for (int s = 0; s < 4; ++s) {
        if (s > 0) {
            for (std::size_t k = 0; k < m; ++k) {
                stage.positions[k] = x0[k] + offsets[s] * dt * kx[k];
                stage.velocities[k] = v0[k] + offsets[s] * dt * kv[k];
            }
        }
        std::vector<double> a = acceleration(stage);
        kx = stage.velocities;
        kv = std::move(a);
        for (std::size_t k = 0; k < m; ++k) {
            sum_x[k] += weights[s] * kx[k];
            sum_v[k] += weights[s] * kv[k];
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        state.positions[k] = x0[k] + dt / 6.0 * sum_x[k];
        state.velocities[k] = v0[k] + dt / 6.0 * sum_v[k];
    }
}

void rk4_step(ParticleState& state, const SimConfig1D& config, double dt, std::size_t step_index) {
    const AccelerationFn field = [&](const ParticleState& stage) {
        ParticleState current = stage;
        const ParticleGraph graph = update_densities(current);
        check_finite(current, step_index);
        try {
            return accelerations(current, graph, config);
        } catch (const SimulationFault& fault) {
            throw SimulationFault(fault.what(), step_index);
        }
    };
    rk4_step(state, field, dt);
    update_densities(state);
    check_finite(state, step_index);
}

std::size_t substeps_for(const SimConfig1D& config, double h) {
    if (config.substeps > 0) return config.substeps;
    const double limit = config.cfl * h / config.sound_speed;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config.dt / limit - 1e-9)));
}

ParticleState make_state_1d(const SimConfig1D& config, std::vector<double> positions) {
    ParticleState state;
    state.domain.dim = 1;
    const std::size_t n = positions.size();
    const double area = state.domain.length(0) / static_cast<double>(n);
    state.support = config.support_factor * area;
    state.positions = std::move(positions);
    state.velocities.assign(n, 0.0);
    state.areas.assign(n, area);
    state.masses.assign(n, area * config.rest_density);
    update_densities(state);
    return state;
}

Trajectory run_simulation(const SimConfig1D& config, ParticleState state, std::uint64_t) {
    state.validate();
    if (state.densities.size() != state.size()) update_densities(state);
    Trajectory traj;
    traj.particle_count = state.size();
    traj.dim = state.dim();
    traj.dt = config.dt;
    traj.areas = state.areas;
    traj.masses = state.masses;
    traj.support = state.support;
    traj.positions.reserve(config.steps + 1);
    traj.velocities.reserve(config.steps + 1);
    traj.densities.reserve(config.steps + 1);
    traj.positions.push_back(state.positions);
    traj.velocities.push_back(state.velocities);
    traj.densities.push_back(state.densities);

    const std::size_t sub = substeps_for(config, state.support);
    const double dt = config.dt / static_cast<double>(sub);
    for (std::size_t step = 0; step < config.steps; ++step) {
        for (std::size_t k = 0; k < sub; ++k) rk4_step(state, config, dt, step + 1);
        traj.positions.push_back(state.positions);
        traj.velocities.push_back(state.velocities);
        traj.densities.push_back(state.densities);
    }
    return traj;
}

}  // namespace sfbc
