#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rime {

// Malformed matrix file or scenario/spec file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameters outside their documented domain.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Some coordinate is present in fewer than gamma * N examples.
class NotGammaComplete : public std::runtime_error {
public:
    NotGammaComplete(double required, double observed, std::size_t coordinate)
        : std::runtime_error("dataset is not gamma-complete: coordinate " +
                             std::to_string(coordinate + 1) + " has present fraction " +
                             std::to_string(observed) + " < gamma = " + std::to_string(required)),
          required_(required),
          observed_(observed),
          coordinate_(coordinate) {}

    double required() const noexcept { return required_; }
    double observed() const noexcept { return observed_; }
    // 0-based.
    std::size_t coordinate() const noexcept { return coordinate_; }

private:
    double required_;
    double observed_;
    std::size_t coordinate_;
};

// A coordinate has no present entry at all.
class EmptyCoordinate : public std::runtime_error {
public:
    explicit EmptyCoordinate(std::size_t coordinate)
        : std::runtime_error("coordinate " + std::to_string(coordinate + 1) +
                             " has no present entries"),
          coordinate_(coordinate) {}
    std::size_t coordinate() const noexcept { return coordinate_; }

private:
    std::size_t coordinate_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (best residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace rime
