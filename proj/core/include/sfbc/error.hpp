#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sfbc {

/// Invalid user input: bad shapes, unknown names, malformed configs.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside the SPH solver (non-finite state, non-positive density).
class SimulationFault : public std::runtime_error {
public:
    SimulationFault(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Loss became non-finite during training.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& what, std::size_t update)
        : std::runtime_error(what + " (update " + std::to_string(update) + ")"), update_(update) {}
    std::size_t update() const noexcept { return update_; }

private:
    std::size_t update_;
};

/// Dataset or checkpoint file failed validation.
class CorruptDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sfbc
