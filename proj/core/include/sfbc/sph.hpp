#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sfbc/convolution.hpp"

namespace sfbc {

struct Domain {
    int dim = 1;
    std::array<double, 3> lo{-1.0, -1.0, -1.0};
    std::array<double, 3> hi{1.0, 1.0, 1.0};
    std::array<bool, 3> periodic{true, true, true};

    double length(int axis) const { return hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]; }
};

/// Per-particle arrays; vector quantities are stored particle-major with `dim` components.
/// Positions are unwrapped; periodicity only enters through minimum-image distances.
struct ParticleState {
    Domain domain;
    double support = 0.0;  // h
    std::vector<double> positions;
    std::vector<double> velocities;
    std::vector<double> areas;  // a (1D) or V (3D)
    std::vector<double> masses;
    std::vector<double> densities;

    int dim() const noexcept { return domain.dim; }
    std::size_t size() const noexcept { return areas.size(); }
    void validate() const;
};

/// Cubic B-spline kernel W(q) = sigma_d / h^d * (6q^3 - 6q^2 + 1 for q <= 1/2, 2(1-q)^3 for q < 1).
struct KernelSpec {
    int dim = 1;

    double sigma() const;  // sigma_d for h = 1
};

double kernel_value(const KernelSpec& spec, double r_over_h, double h);
/// dW/dr in units of 1/h^(d+1).
double kernel_derivative(const KernelSpec& spec, double r_over_h, double h);
/// Gradient with respect to x_i for displacement x_i - x_j.
std::vector<double> kernel_gradient(const KernelSpec& spec, std::span<const double> displacement, double h);

/// Minimum-image displacement x_i - x_j.
void min_image(const Domain& domain, const double* xi, const double* xj, double* out);

ParticleGraph neighbor_search(const ParticleState& state);
ParticleGraph neighbor_search_brute_force(const ParticleState& state);
ParticleGraph neighbor_search(const Domain& domain, std::span<const double> positions, double h);
ParticleGraph neighbor_search_brute_force(const Domain& domain, std::span<const double> positions, double h);

/// delta_i = sum over neighbors and i itself of a_j W_ij.
std::vector<double> number_density(const ParticleState& state, const ParticleGraph& graph);
/// rho_i = sum over neighbors and i itself of m_j W_ij.
std::vector<double> summation_density(const ParticleState& state, const ParticleGraph& graph);
/// sum_j A_j (m_j / rho_j) grad_i W_ij; result particle-major with dim components.
std::vector<double> naive_gradient(const ParticleState& state, const ParticleGraph& graph, std::span<const double> quantity);
/// sum_j w_j grad_i W_ij with arbitrary per-particle weights w (e.g. areas for the number-density gradient).
std::vector<double> weighted_kernel_gradient(const ParticleState& state, const ParticleGraph& graph,
                                             std::span<const double> weights);

struct SimConfig1D {
    std::size_t n_particles = 2048;
    double support_factor = 4.0;  // h = support_factor * a
    double dt = 1e-3;
    double stiffness = 10.0;       // kappa
    double sound_speed = 10.0;     // c_s
    double rest_density = 1000.0;  // rho_0
    double alpha = 1.0;
    double beta = 2.0;
    std::size_t steps = 2048;
    std::size_t substeps = 0;  // RK4 steps per stored frame; 0 selects a CFL-based count
    double cfl = 0.25;
};

std::vector<double> accelerations(const ParticleState& state, const ParticleGraph& graph, const SimConfig1D& config);

/// Recomputes summation densities in place and returns the graph used.
ParticleGraph update_densities(ParticleState& state);

/// One classic RK4 step of size dt on (x, v); densities recomputed at every stage.
void rk4_step(ParticleState& state, const SimConfig1D& config, double dt, std::size_t step_index = 0);

using AccelerationFn = std::function<std::vector<double>(const ParticleState&)>;
/// RK4 with a caller-supplied acceleration field (positions and velocities of the stage are in the argument).
void rk4_step(ParticleState& state, const AccelerationFn& acceleration, double dt);

struct Trajectory {
    std::size_t particle_count = 0;
    int dim = 1;
    double dt = 0.0;
    std::vector<std::vector<double>> positions;   // frames 0..steps
    std::vector<std::vector<double>> velocities;  // frames 0..steps
    std::vector<std::vector<double>> densities;   // frames 0..steps
    std::vector<double> areas;
    std::vector<double> masses;
    double support = 0.0;

    std::size_t frames() const noexcept { return positions.size(); }
};

std::size_t substeps_for(const SimConfig1D& config, double h);

/// Builds the periodic 1D initial state for the given particle positions (rest, uniform areas).
ParticleState make_state_1d(const SimConfig1D& config, std::vector<double> positions);

/// Integrates config.steps frames; the seed is recorded only (the solver is deterministic).
Trajectory run_simulation(const SimConfig1D& config, ParticleState initial, std::uint64_t seed = 0);

}  // namespace sfbc
