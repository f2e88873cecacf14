#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sfbc/sph.hpp"
#include "sfbc/types.hpp"

namespace sfbc {

/// Gradient noise on the integer lattice. With period > 0 the lattice wraps every `period` cells on each axis.
class PerlinNoise {
public:
    explicit PerlinNoise(std::uint64_t seed, int period = 0);

    double operator()(double x, double y) const;
    double operator()(double x, double y, double z) const;

private:
    int hash(int x, int y, int z) const;
    int wrap(int c) const;

    std::array<int, 512> perm_{};
    int period_ = 0;
};

/// Value in [-1, 1], zero at integer lattice points.
double perlin(std::uint64_t seed, int dim, std::span<const double> point);

struct NoiseConfig {
    std::uint64_t seed = 0;
    int octaves = 4;
    double persistence = 0.75;  // mixing weight alpha
    double lacunarity = 2.0;
    double frequency = 1.0;
    int period = 0;  // lattice period at the base frequency; 0 disables wrapping

    void validate() const;
};

class OctaveNoise {
public:
    explicit OctaveNoise(const NoiseConfig& config);

    /// Weighted octave sum normalized by the sum of weights.
    double operator()(std::span<const double> point) const;

private:
    NoiseConfig config_;
    std::vector<PerlinNoise> layers_;
};

double octave_noise(const NoiseConfig& config, std::span<const double> point);

/// 2 + 0.25 * noise(r cos t, r sin t) sampled at t = -pi + 2 pi k / resolution.
std::vector<double> periodic_profile_1d(const NoiseConfig& config, std::size_t resolution = 2048, double radius = 1.0);
std::vector<double> periodic_profile_1d(const std::function<double(double, double)>& noise, std::size_t resolution,
                                        double radius = 1.0);
double periodic_profile_value(const std::function<double(double, double)>& noise, double theta, double radius = 1.0);

/// Regular quantiles (m + 1/2) / n pushed through the piecewise-linear inverse CDF of a profile on [-1, 1).
std::vector<double> sample_inverse_cdf(std::span<const double> profile, std::size_t n = 2048);

/// One stored simulation or sample: fields ordered [frame][field][particle].
struct DatasetFile {
    std::size_t particle_count = 0;
    std::size_t frame_count = 0;
    std::vector<std::string> fields;
    std::map<std::string, std::string> attributes;
    std::vector<double> data;

    std::size_t field_index(const std::string& name) const;
    std::span<const double> field(std::size_t frame, const std::string& name) const;
    std::span<const double> field(std::size_t frame, std::size_t index) const;
    double attribute(const std::string& name) const;
};

void write_dataset_file(const std::filesystem::path& path, const DatasetFile& file);
DatasetFile read_dataset_file(const std::filesystem::path& path);

struct ManifestEntry {
    std::string name;
    std::uint64_t seed = 0;
    std::string file;  // relative to the manifest directory
    std::size_t step_count = 0;
    std::size_t particle_count = 0;
    std::vector<std::string> fields;
    std::string split;  // "train" or "test"
};

struct DatasetManifest {
    std::string name;
    std::string test_case;  // "tc1" or "tc4"
    std::vector<ManifestEntry> entries;
    std::string generator_config;  // JSON text
    std::filesystem::path directory;

    std::vector<std::size_t> split(const std::string& which) const;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
/// Reads and validates the manifest: every file must exist with a matching header.
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Loaded dataset: manifest plus lazily read files.
class Dataset {
public:
    explicit Dataset(const std::filesystem::path& manifest_path);
    explicit Dataset(DatasetManifest manifest);

    const DatasetManifest& manifest() const noexcept { return manifest_; }
    DatasetFile load(std::size_t entry) const;

private:
    DatasetManifest manifest_;
};

Dataset read_dataset(const std::filesystem::path& manifest_path);
/// Writes files plus manifest into `directory` and returns the manifest (with file names filled in).
DatasetManifest write_dataset(const std::filesystem::path& directory, DatasetManifest manifest,
                              const std::vector<DatasetFile>& files);

struct TC1Config {
    std::size_t simulations = 36;
    std::size_t test_simulations = 4;
    std::size_t profile_resolution = 2048;
    double circle_radius = 1.0;
    NoiseConfig noise;
    SimConfig1D sim;
    std::uint64_t seed = 0;

    static TC1Config desk();
    static TC1Config paper();
};

DatasetFile trajectory_to_file(const Trajectory& trajectory, std::uint64_t seed, std::size_t steps);
Trajectory file_to_trajectory(const DatasetFile& file);

/// Runs every simulation and writes the dataset; `threads` simulations run concurrently.
DatasetManifest generate_tc1(const TC1Config& config, const std::filesystem::path& directory, unsigned threads = 1);

/// Training pair at frame t: features [v_prior, a/h], target [v_next], positions x_t.
struct TC1Sample {
    std::size_t frame = 0;
    std::vector<double> positions;
    Matrix features;
    Matrix target;
};

TC1Sample derive_tc1_sample(const Trajectory& trajectory, std::size_t t, std::size_t s = 16);
std::vector<TC1Sample> derive_tc1_targets(const Trajectory& trajectory, std::size_t s = 16);

struct TC4Config {
    std::size_t train_samples = 1024;
    std::size_t test_samples = 4;
    std::size_t lattice = 16;
    double jitter = 0.05;  // standard deviation in units of h
    double noise_amplitude = 1.0;
    NoiseConfig noise{0, 4, 0.75, 2.0, 2.0, 4};  // period 4 cells spans the domain at f = 2
    std::uint64_t seed = 0;

    static TC4Config desk();
    static TC4Config paper();
};

/// Support radius giving 32 periodic lattice neighbors (midpoint of the admissible interval).
double tc4_support(std::size_t lattice);
DatasetFile generate_tc4_sample(const TC4Config& config, std::uint64_t seed);
DatasetManifest generate_tc4(const TC4Config& config, const std::filesystem::path& directory, unsigned threads = 1);
/// Rebuilds the particle state stored in a tc4 sample file.
ParticleState tc4_state(const DatasetFile& file);

}  // namespace sfbc
