#include "sfbc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "parallel.hpp"
#include "sfbc/error.hpp"
#include "sfbc/network.hpp"
#include "sfbc/random.hpp"

namespace sfbc {

using nlohmann::json;

namespace {

constexpr unsigned char kFormatVersion = 1;

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double lerp(double a, double b, double t) { return a + t * (b - a); }

const std::array<std::array<double, 2>, 16>& directions_2d() {
    static const auto table = [] {
        std::array<std::array<double, 2>, 16> out{};
        for (std::size_t k = 0; k < 16; ++k) {
            const double angle = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / 16.0;
            out[k] = {std::cos(angle), std::sin(angle)};
        }
        return out;
    }();
    return table;
}

const std::array<std::array<double, 3>, 12>& directions_3d() {
    static const auto table = [] {
        const double s = 1.0 / std::sqrt(2.0);
        return std::array<std::array<double, 3>, 12>{{{s, s, 0},
                                                      {-s, s, 0},
                                                      {s, -s, 0},
                                                      {-s, -s, 0},
                                                      {s, 0, s},
                                                      {-s, 0, s},
                                                      {s, 0, -s},
                                                      {-s, 0, -s},
                                                      {0, s, s},
                                                      {0, -s, s},
                                                      {0, s, -s},
                                                      {0, -s, -s}}};
    }();
    return table;
}

std::string format_double(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

}  // namespace

PerlinNoise::PerlinNoise(std::uint64_t seed, int period) : period_(period) {
    if (period < 0) throw ConfigError("noise period must be non-negative");
    Philox rng(seed, 0x5045524Cu);
    const auto order = permutation(256, rng);
    for (std::size_t k = 0; k < 256; ++k) {
        perm_[k] = static_cast<int>(order[k]);
        perm_[k + 256] = perm_[k];
    }
}

int PerlinNoise::wrap(int c) const {
    if (period_ > 0) {
        c %= period_;
        if (c < 0) c += period_;
    }
    return c & 255;
}

int PerlinNoise::hash(int x, int y, int z) const {
    return perm_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(wrap(x))] +
                                                                          wrap(y))] +
                                          wrap(z))];
}

double PerlinNoise::operator()(double x, double y) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    const double rx = x - fx, ry = y - fy;
    const auto& dirs = directions_2d();
    auto corner = [&](int cx, int cy, double dx, double dy) {
        const auto& g = dirs[static_cast<std::size_t>(hash(ix + cx, iy + cy, 0) & 15)];
        return g[0] * dx + g[1] * dy;
    };
    const double u = fade(rx), v = fade(ry);
    const double value = lerp(lerp(corner(0, 0, rx, ry), corner(1, 0, rx - 1, ry), u),
                              lerp(corner(0, 1, rx, ry - 1), corner(1, 1, rx - 1, ry - 1), u), v);
    return std::clamp(value * std::sqrt(2.0), -1.0, 1.0);
}

double PerlinNoise::operator()(double x, double y, double z) const {
    const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy), iz = static_cast<int>(fz);
    const double rx = x - fx, ry = y - fy, rz = z - fz;
    const auto& dirs = directions_3d();
    auto corner = [&](int cx, int cy, int cz) {
        const auto& g = dirs[static_cast<std::size_t>(hash(ix + cx, iy + cy, iz + cz) % 12)];
        return g[0] * (rx - cx) + g[1] * (ry - cy) + g[2] * (rz - cz);
    };
    const double u = fade(rx), v = fade(ry), w = fade(rz);
    const double value =
        lerp(lerp(lerp(corner(0, 0, 0), corner(1, 0, 0), u), lerp(corner(0, 1, 0), corner(1, 1, 0), u), v),
             lerp(lerp(corner(0, 0, 1), corner(1, 0, 1), u), lerp(corner(0, 1, 1), corner(1, 1, 1), u), v), w);
    return std::clamp(value * 2.0 / std::sqrt(3.0), -1.0, 1.0);
}

double perlin(std::uint64_t seed, int dim, std::span<const double> point) {
    if (dim != 2 && dim != 3) throw ConfigError("perlin noise supports 2 or 3 dimensions");
    if (point.size() != static_cast<std::size_t>(dim)) throw ConfigError("point size does not match noise dimension");
    const PerlinNoise noise(seed);
    return dim == 2 ? noise(point[0], point[1]) : noise(point[0], point[1], point[2]);
}

void NoiseConfig::validate() const {
    if (octaves < 1) throw ConfigError("noise octaves must be >= 1");
    if (!(lacunarity > 1.0)) throw ConfigError("noise lacunarity must be > 1");
    if (!(persistence > 0.0 && persistence <= 1.0)) throw ConfigError("noise mixing weight must be in (0, 1]");
    if (!(frequency > 0.0)) throw ConfigError("noise frequency must be positive");
    if (period < 0) throw ConfigError("noise period must be non-negative");
    if (period > 0 && lacunarity != std::round(lacunarity))
        throw ConfigError("periodic noise requires an integer lacunarity");
}

OctaveNoise::OctaveNoise(const NoiseConfig& config) : config_(config) {
    config_.validate();
    double period = config_.period;
    for (int i = 0; i < config_.octaves; ++i) {
        const std::uint64_t seed = i == 0 ? config_.seed : derive_seed(config_.seed, static_cast<std::uint64_t>(i));
        layers_.emplace_back(seed, static_cast<int>(period));
        period *= config_.lacunarity;
    }
}

double OctaveNoise::operator()(std::span<const double> point) const {
    if (point.size() != 2 && point.size() != 3) throw ConfigError("octave noise supports 2 or 3 dimensions");
    double sum = 0.0, weight_sum = 0.0, weight = 1.0, frequency = config_.frequency;
    for (const auto& layer : layers_) {
        const double value = point.size() == 2 ? layer(point[0] * frequency, point[1] * frequency)
                                               : layer(point[0] * frequency, point[1] * frequency,
                                                       point[2] * frequency);
        sum += weight * value;
        weight_sum += weight;
        weight *= config_.persistence;
        frequency *= config_.lacunarity;
    }
    return std::clamp(sum / weight_sum, -1.0, 1.0);
}

double octave_noise(const NoiseConfig& config, std::span<const double> point) { return OctaveNoise(config)(point); }

double periodic_profile_value(const std::function<double(double, double)>& noise, double theta, double radius) {
    return 2.0 + 0.25 * noise(radius * std::cos(theta), radius * std::sin(theta));
}

std::vector<double> periodic_profile_1d(const std::function<double(double, double)>& noise, std::size_t resolution,
                                        double radius) {
    if (resolution < 2) throw ConfigError("profile resolution must be >= 2");
    std::vector<double> out(resolution);
    for (std::size_t k = 0; k < resolution; ++k) {
        const double theta = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(k) /
                                                     static_cast<double>(resolution);
        out[k] = periodic_profile_value(noise, theta, radius);
    }
    return out;
}

std::vector<double> periodic_profile_1d(const NoiseConfig& config, std::size_t resolution, double radius) {
    const OctaveNoise noise(config);
    return periodic_profile_1d(
        [&](double x, double y) {
            const std::array<double, 2> p{x, y};
            return noise(p);
        },
        resolution, radius);
}

std::vector<double> sample_inverse_cdf(std::span<const double> profile, std::size_t n) {
    if (profile.empty()) throw ConfigError("profile is empty");
    if (n == 0) throw ConfigError("sample count must be positive");
    for (double p : profile)
        if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("profile must be strictly positive");
    const std::size_t cells = profile.size();
    std::vector<double> cdf(cells + 1, 0.0);
    for (std::size_t k = 0; k < cells; ++k) cdf[k + 1] = cdf[k] + profile[k];
    const double total = cdf.back();
    const double width = 2.0 / static_cast<double>(cells);
    std::vector<double> out(n);
    std::size_t cell = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double target = total * (static_cast<double>(m) + 0.5) / static_cast<double>(n);
        while (cell + 1 < cells && cdf[cell + 1] <= target) ++cell;
        const double frac = (target - cdf[cell]) / profile[cell];
        out[m] = -1.0 + width * (static_cast<double>(cell) + std::clamp(frac, 0.0, 1.0));
    }
    return out;
}

std::size_t DatasetFile::field_index(const std::string& name) const {
    const auto it = std::find(fields.begin(), fields.end(), name);
    if (it == fields.end()) throw ConfigError("dataset file has no field '" + name + "'");
    return static_cast<std::size_t>(it - fields.begin());
}

std::span<const double> DatasetFile::field(std::size_t frame, std::size_t index) const {
    if (frame >= frame_count || index >= fields.size()) throw ConfigError("dataset field index out of range");
    return {data.data() + (frame * fields.size() + index) * particle_count, particle_count};
}

std::span<const double> DatasetFile::field(std::size_t frame, const std::string& name) const {
    return field(frame, field_index(name));
}

double DatasetFile::attribute(const std::string& name) const {
    const auto it = attributes.find(name);
    if (it == attributes.end()) throw ConfigError("dataset file has no attribute '" + name + "'");
    return std::stod(it->second);
}

namespace {

json file_header(const DatasetFile& file, std::uint64_t checksum) {
    return json{{"particle_count", file.particle_count},
                {"step_count", file.frame_count > 0 ? file.frame_count - 1 : 0},
                {"frame_count", file.frame_count},
                {"fields", file.fields},
                {"dtype", "f64le"},
                {"attributes", file.attributes},
                {"checksum", detail::hex64(checksum)}};
}

struct FileHeader {
    DatasetFile shape;
    std::string checksum;
};

FileHeader read_header(std::istream& in, const std::filesystem::path& path) {
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "SFBC")
        throw CorruptDataError("not a dataset file (bad magic): " + path.string());
    char version = 0;
    if (!in.read(&version, 1)) throw CorruptDataError("truncated dataset file: " + path.string());
    if (static_cast<unsigned char>(version) != kFormatVersion)
        throw CorruptDataError("unsupported dataset file version in " + path.string());
    std::uint64_t length = 0;
    if (!detail::read_u64(in, length) || length > (1u << 26))
        throw CorruptDataError("truncated dataset header: " + path.string());
    std::string text(length, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(length)))
        throw CorruptDataError("truncated dataset header: " + path.string());
    FileHeader header;
    try {
        const json j = json::parse(text);
        if (j.at("dtype").get<std::string>() != "f64le") throw CorruptDataError("unsupported dtype in " + path.string());
        header.shape.particle_count = j.at("particle_count").get<std::size_t>();
        header.shape.frame_count = j.at("frame_count").get<std::size_t>();
        header.shape.fields = j.at("fields").get<std::vector<std::string>>();
        header.shape.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
        header.checksum = j.at("checksum").get<std::string>();
        if (j.at("step_count").get<std::size_t>() + 1 != header.shape.frame_count)
            throw CorruptDataError("inconsistent step count in " + path.string());
    } catch (const json::exception& e) {
        throw CorruptDataError("malformed dataset header in " + path.string() + ": " + e.what());
    }
    return header;
}

}  // namespace

void write_dataset_file(const std::filesystem::path& path, const DatasetFile& file) {
    if (file.data.size() != file.particle_count * file.frame_count * file.fields.size())
        throw ConfigError("dataset payload size does not match its shape");
    const auto payload = detail::encode_doubles(file.data);
    const std::string header = file_header(file, detail::fnv1a(payload.data(), payload.size())).dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write("SFBC", 4);
    out.put(static_cast<char>(kFormatVersion));
    detail::write_u64(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

DatasetFile read_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file " + path.string());
    FileHeader header = read_header(in, path);
    DatasetFile file = std::move(header.shape);
    const std::size_t count = file.particle_count * file.frame_count * file.fields.size();
    std::vector<unsigned char> bytes(count * 8);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
        throw CorruptDataError("truncated dataset payload: " + path.string());
    if (in.peek() != std::char_traits<char>::eof()) throw CorruptDataError("trailing bytes in " + path.string());
    if (detail::hex64(detail::fnv1a(bytes.data(), bytes.size())) != header.checksum)
        throw CorruptDataError("checksum mismatch in " + path.string());
    file.data.resize(count);
    detail::decode_doubles(bytes, file.data);
    return file;
}

std::vector<std::size_t> DatasetManifest::split(const std::string& which) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < entries.size(); ++k)
        if (entries[k].split == which) out.push_back(k);
    return out;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    json entries = json::array();
    for (const auto& e : manifest.entries) {
        entries.push_back({{"name", e.name},
                           {"seed", e.seed},
                           {"file", e.file},
                           {"step_count", e.step_count},
                           {"particle_count", e.particle_count},
                           {"fields", e.fields},
                           {"split", e.split}});
    }
    json generator = manifest.generator_config.empty() ? json::object() : json::parse(manifest.generator_config);
    const json j{{"format", "sfbc-dataset"},
                 {"version", kFormatVersion},
                 {"name", manifest.name},
                 {"test_case", manifest.test_case},
                 {"entries", entries},
                 {"generator", generator}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset manifest " + path.string());
    DatasetManifest manifest;
    manifest.directory = path.parent_path();
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != "sfbc-dataset") throw CorruptDataError("not a dataset manifest");
        manifest.name = j.at("name").get<std::string>();
        manifest.test_case = j.at("test_case").get<std::string>();
        manifest.generator_config = j.at("generator").dump();
        for (const auto& e : j.at("entries")) {
            ManifestEntry entry;
            entry.name = e.at("name").get<std::string>();
            entry.seed = e.at("seed").get<std::uint64_t>();
            entry.file = e.at("file").get<std::string>();
            entry.step_count = e.at("step_count").get<std::size_t>();
            entry.particle_count = e.at("particle_count").get<std::size_t>();
            entry.fields = e.at("fields").get<std::vector<std::string>>();
            entry.split = e.at("split").get<std::string>();
            if (entry.split != "train" && entry.split != "test")
                throw CorruptDataError("manifest entry '" + entry.name + "' has unknown split");
            manifest.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw CorruptDataError("malformed dataset manifest " + path.string() + ": " + e.what());
    }
    for (const auto& entry : manifest.entries) {
        const auto file = manifest.directory / entry.file;
        std::ifstream f(file, std::ios::binary);
        if (!f) throw CorruptDataError("manifest lists missing file " + file.string());
        const FileHeader header = read_header(f, file);
        if (header.shape.particle_count != entry.particle_count || header.shape.frame_count != entry.step_count + 1 ||
            header.shape.fields != entry.fields)
            throw CorruptDataError("header of " + file.string() + " does not match the manifest");
    }
    return manifest;
}

Dataset::Dataset(const std::filesystem::path& manifest_path) : manifest_(read_manifest(manifest_path)) {}

Dataset::Dataset(DatasetManifest manifest) : manifest_(std::move(manifest)) {}

DatasetFile Dataset::load(std::size_t entry) const {
    if (entry >= manifest_.entries.size()) throw ConfigError("dataset entry index out of range");
    return read_dataset_file(manifest_.directory / manifest_.entries[entry].file);
}

Dataset read_dataset(const std::filesystem::path& manifest_path) { return Dataset(manifest_path); }

DatasetManifest write_dataset(const std::filesystem::path& directory, DatasetManifest manifest,
                              const std::vector<DatasetFile>& files) {
    if (manifest.entries.size() != files.size()) throw ConfigError("manifest entry count does not match file count");
    if (!std::filesystem::is_directory(directory))
        throw std::runtime_error("output directory does not exist: " + directory.string());
    for (std::size_t k = 0; k < files.size(); ++k) {
        auto& entry = manifest.entries[k];
        if (entry.file.empty()) entry.file = entry.name + ".sfbc";
        entry.particle_count = files[k].particle_count;
        entry.step_count = files[k].frame_count > 0 ? files[k].frame_count - 1 : 0;
        entry.fields = files[k].fields;
        write_dataset_file(directory / entry.file, files[k]);
    }
    manifest.directory = directory;
    write_manifest(directory / "manifest.json", manifest);
    return manifest;
}

TC1Config TC1Config::desk() {
    TC1Config config;
    config.simulations = 10;
    config.test_simulations = 2;
    config.sim.steps = 512;
    return config;
}

TC1Config TC1Config::paper() { return TC1Config{}; }

DatasetFile trajectory_to_file(const Trajectory& trajectory, std::uint64_t seed, std::size_t steps) {
    if (trajectory.dim != 1) throw ConfigError("only 1D trajectories are serialized");
    DatasetFile file;
    file.particle_count = trajectory.particle_count;
    file.frame_count = trajectory.frames();
    file.fields = {"position", "velocity", "density"};
    file.attributes = {{"area", format_double(trajectory.areas.empty() ? 0.0 : trajectory.areas.front())},
                       {"mass", format_double(trajectory.masses.empty() ? 0.0 : trajectory.masses.front())},
                       {"support", format_double(trajectory.support)},
                       {"dt", format_double(trajectory.dt)},
                       {"seed", std::to_string(seed)},
                       {"steps", std::to_string(steps)}};
    file.data.reserve(file.particle_count * file.frame_count * 3);
    for (std::size_t t = 0; t < file.frame_count; ++t) {
        for (const auto* source : {&trajectory.positions[t], &trajectory.velocities[t], &trajectory.densities[t]})
            file.data.insert(file.data.end(), source->begin(), source->end());
    }
    return file;
}

Trajectory file_to_trajectory(const DatasetFile& file) {
    Trajectory traj;
    traj.particle_count = file.particle_count;
    traj.dim = 1;
    traj.dt = file.attribute("dt");
    traj.support = file.attribute("support");
    traj.areas.assign(file.particle_count, file.attribute("area"));
    traj.masses.assign(file.particle_count, file.attribute("mass"));
    const std::size_t px = file.field_index("position"), pv = file.field_index("velocity"),
                      pd = file.field_index("density");
    for (std::size_t t = 0; t < file.frame_count; ++t) {
        auto x = file.field(t, px), v = file.field(t, pv), d = file.field(t, pd);
        traj.positions.emplace_back(x.begin(), x.end());
        traj.velocities.emplace_back(v.begin(), v.end());
        traj.densities.emplace_back(d.begin(), d.end());
    }
    return traj;
}

namespace {

json noise_json(const NoiseConfig& n) {
    return {{"seed", n.seed},           {"octaves", n.octaves},     {"persistence", n.persistence},
            {"lacunarity", n.lacunarity}, {"frequency", n.frequency}, {"period", n.period}};
}

std::string zero_padded(std::size_t k) {
    char buffer[24];
    std::snprintf(buffer, sizeof buffer, "%04zu", k);
    return buffer;
}

}  // namespace

DatasetManifest generate_tc1(const TC1Config& config, const std::filesystem::path& directory, unsigned threads) {
    if (config.simulations == 0 || config.test_simulations >= config.simulations)
        throw ConfigError("tc1 needs at least one training simulation");
    if (config.sim.n_particles < 8) throw ConfigError("tc1 needs at least 8 particles");
    if (!std::filesystem::is_directory(directory))
        throw std::runtime_error("output directory does not exist: " + directory.string());

    DatasetManifest manifest;
    manifest.name = "tc1";
    manifest.test_case = "tc1";
    const auto& s = config.sim;
    manifest.generator_config = json{{"seed", config.seed},
                                     {"simulations", config.simulations},
                                     {"test_simulations", config.test_simulations},
                                     {"profile_resolution", config.profile_resolution},
                                     {"circle_radius", config.circle_radius},
                                     {"noise", noise_json(config.noise)},
                                     {"sim",
                                      {{"n_particles", s.n_particles},
                                       {"support_factor", s.support_factor},
                                       {"dt", s.dt},
                                       {"stiffness", s.stiffness},
                                       {"sound_speed", s.sound_speed},
                                       {"rest_density", s.rest_density},
                                       {"alpha", s.alpha},
                                       {"beta", s.beta},
                                       {"steps", s.steps},
                                       {"substeps", s.substeps},
                                       {"cfl", s.cfl}}}}
                                     .dump();

    Philox split_rng(config.seed, 0x53504C49u);
    const auto order = permutation(config.simulations, split_rng);
    std::vector<std::string> split(config.simulations, "train");
    for (std::size_t k = 0; k < config.test_simulations; ++k) split[order[k]] = "test";

    manifest.entries.resize(config.simulations);
    for (std::size_t k = 0; k < config.simulations; ++k) {
        auto& e = manifest.entries[k];
        e.name = "sim_" + zero_padded(k);
        e.seed = derive_seed(config.seed, k);
        e.file = e.name + ".sfbc";
        e.split = split[k];
        e.step_count = s.steps;
        e.particle_count = s.n_particles;
        e.fields = {"position", "velocity", "density"};
    }

    detail::parallel_for(config.simulations, threads, [&](std::size_t k) {
        const auto& e = manifest.entries[k];
        NoiseConfig noise = config.noise;
        noise.seed = e.seed;
        const auto profile = periodic_profile_1d(noise, config.profile_resolution, config.circle_radius);
        ParticleState state = make_state_1d(s, sample_inverse_cdf(profile, s.n_particles));
        const Trajectory traj = run_simulation(s, std::move(state), e.seed);
        write_dataset_file(directory / e.file, trajectory_to_file(traj, e.seed, s.steps));
    });
    manifest.directory = directory;
    write_manifest(directory / "manifest.json", manifest);
    return manifest;
}

TC1Sample derive_tc1_sample(const Trajectory& trajectory, std::size_t t, std::size_t s) {
    if (s == 0) throw ConfigError("velocity window must be positive");
    if (t < s || t + s >= trajectory.frames())
        throw ConfigError("frame " + std::to_string(t) + " leaves no full velocity window");
    const std::size_t n = trajectory.particle_count;
    const double dt = trajectory.dt;
    TC1Sample sample;
    sample.frame = t;
    sample.positions = trajectory.positions[t];
    sample.features = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
    sample.target = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
    const double inv_s = 1.0 / static_cast<double>(s);
    for (std::size_t k = 0; k < s; ++k) {
        const auto& a0 = trajectory.positions[t - s + k];
        const auto& a1 = trajectory.positions[t - s + k + 1];
        const auto& b0 = trajectory.positions[t + k];
        const auto& b1 = trajectory.positions[t + k + 1];
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            sample.features(r, 0) += inv_s * finite_velocity(a1[i], a0[i], dt);
            sample.target(r, 0) += inv_s * finite_velocity(b1[i], b0[i], dt);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        sample.features(static_cast<Eigen::Index>(i), 1) = trajectory.areas[i] / trajectory.support;
    return sample;
}

std::vector<TC1Sample> derive_tc1_targets(const Trajectory& trajectory, std::size_t s) {
    if (trajectory.frames() <= 2 * s) throw ConfigError("trajectory too short for the velocity window");
    std::vector<TC1Sample> out;
    for (std::size_t t = s; t + s < trajectory.frames(); ++t) out.push_back(derive_tc1_sample(trajectory, t, s));
    return out;
}

TC4Config TC4Config::desk() {
    TC4Config config;
    config.train_samples = 128;
    config.test_samples = 4;
    config.lattice = 8;
    return config;
}

TC4Config TC4Config::paper() { return TC4Config{}; }

double tc4_support(std::size_t lattice) {
    if (lattice < 5) throw ConfigError("tc4 lattice must have at least 5 particles per side");
    const double spacing = 2.0 / static_cast<double>(lattice);
    return spacing * (2.0 + std::sqrt(5.0)) / 2.0;
}

DatasetFile generate_tc4_sample(const TC4Config& config, std::uint64_t seed) {
    const std::size_t side = config.lattice;
    const std::size_t n = side * side * side;
    const double h = tc4_support(side);
    const double spacing = 2.0 / static_cast<double>(side);
    const double volume = 8.0 / static_cast<double>(n);

    ParticleState state;
    state.domain.dim = 3;
    state.support = h;
    state.positions.resize(3 * n);
    state.areas.resize(n);
    NoiseConfig noise = config.noise;
    noise.seed = seed;
    const OctaveNoise field(noise);
    Philox rng(seed, 0x4A495454u);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c[3] = {i / (side * side), (i / side) % side, i % side};
        std::array<double, 3> p{};
        for (int a = 0; a < 3; ++a) p[static_cast<std::size_t>(a)] = -1.0 + spacing * (static_cast<double>(c[a]) + 0.5);
        const double scale = config.noise_amplitude * field(p) + (1.0 - config.noise_amplitude);
        state.areas[i] = volume * scale;
        for (int a = 0; a < 3; ++a)
            state.positions[3 * i + static_cast<std::size_t>(a)] =
                p[static_cast<std::size_t>(a)] + (config.jitter > 0.0 ? rng.normal(0.0, config.jitter * h) : 0.0);
    }
    state.masses = state.areas;
    const ParticleGraph graph = neighbor_search(state);
    const auto rho = number_density(state, graph);
    const auto grad = weighted_kernel_gradient(state, graph, state.areas);

    DatasetFile file;
    file.particle_count = n;
    file.frame_count = 1;
    file.fields = {"x", "y", "z", "volume", "density", "grad_x", "grad_y", "grad_z"};
    file.attributes = {{"support", format_double(h)},
                       {"lattice", std::to_string(side)},
                       {"seed", std::to_string(seed)},
                       {"jitter", format_double(config.jitter)}};
    file.data.resize(8 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
            file.data[a * n + i] = state.positions[3 * i + a];
            file.data[(5 + a) * n + i] = grad[3 * i + a];
        }
        file.data[3 * n + i] = state.areas[i];
        file.data[4 * n + i] = rho[i];
    }
    return file;
}

DatasetManifest generate_tc4(const TC4Config& config, const std::filesystem::path& directory, unsigned threads) {
    if (config.train_samples == 0) throw ConfigError("tc4 needs at least one training sample");
    if (config.jitter < 0.0) throw ConfigError("jitter must be non-negative");
    if (!std::filesystem::is_directory(directory))
        throw std::runtime_error("output directory does not exist: " + directory.string());
    tc4_support(config.lattice);

    DatasetManifest manifest;
    manifest.name = "tc4";
    manifest.test_case = "tc4";
    manifest.generator_config = json{{"seed", config.seed},
                                     {"train_samples", config.train_samples},
                                     {"test_samples", config.test_samples},
                                     {"lattice", config.lattice},
                                     {"jitter", config.jitter},
                                     {"noise_amplitude", config.noise_amplitude},
                                     {"noise", noise_json(config.noise)}}
                                    .dump();
    const std::size_t total = config.train_samples + config.test_samples;
    const std::size_t n = config.lattice * config.lattice * config.lattice;
    manifest.entries.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
        auto& e = manifest.entries[k];
        e.name = "sample_" + zero_padded(k);
        e.seed = derive_seed(config.seed, k);
        e.file = e.name + ".sfbc";
        e.split = k < config.train_samples ? "train" : "test";
        e.step_count = 0;
        e.particle_count = n;
        e.fields = {"x", "y", "z", "volume", "density", "grad_x", "grad_y", "grad_z"};
    }
    detail::parallel_for(total, threads, [&](std::size_t k) {
        write_dataset_file(directory / manifest.entries[k].file, generate_tc4_sample(config, manifest.entries[k].seed));
    });
    manifest.directory = directory;
    write_manifest(directory / "manifest.json", manifest);
    return manifest;
}

ParticleState tc4_state(const DatasetFile& file) {
    ParticleState state;
    state.domain.dim = 3;
    state.support = file.attribute("support");
    const std::size_t n = file.particle_count;
    const auto x = file.field(0, "x"), y = file.field(0, "y"), z = file.field(0, "z");
    const auto v = file.field(0, "volume");
    state.positions.resize(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        state.positions[3 * i] = x[i];
        state.positions[3 * i + 1] = y[i];
        state.positions[3 * i + 2] = z[i];
    }
    state.areas.assign(v.begin(), v.end());
    state.masses = state.areas;
    return state;
}

}  // namespace sfbc
