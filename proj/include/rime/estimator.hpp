#pragma once

// Iterative robust mean estimation on incomplete data: coordinate-wise median
// start, fill, then repeated adjust-and-filter under the rho schedule
// rho <- sqrt(C6 beta^2 eps' + (1 - c7 g*) rho^2). Also the random-hashing
// pre-processor and the stacking baseline.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rime/dataset.hpp"
#include "rime/robust_core.hpp"

namespace rime {

enum class DistClass { p1, p2 };

struct EstimatorConfig {
    double epsilon = 0.0;
    double gamma = 1.0;
    double delta = 0.1;
    DistClass dist_class = DistClass::p1;
    // P1 only; P2 always uses eta = 0.
    double eta = 1.0;
    // 0 picks the automatic count (see iteration_cap).
    std::size_t iterations = 0;

    double C6 = 1.0;
    double c7 = 0.25;
    double beta_calibration = 3.0;
    double C_median = 10.0;
    double C0 = 20.0;
    double C3 = 2.0;
    double C4 = 4.0;

    struct Hashing {
        bool enabled = false;
        std::size_t B = 8;
        // 0 means (B - 2) / B^2.
        double c_threshold = 0.0;
    } hashing;

    ScoreBackend backend = ScoreBackend::exact_spectral;
    bool hard_removal = false;
    std::uint64_t seed = 0;

    // Throws ConfigError for values outside their domain.
    void validate() const;
};

struct ClassParams {
    double epsilon_prime = 0.0;
    double g_star = 0.0;
    double eta = 0.0;
    // Infinite when epsilon = 0.
    double beta = 0.0;
    // beta^2 * epsilon', finite even when epsilon = 0.
    double beta2_eps = 0.0;
};

ClassParams class_params(const EstimatorConfig& cfg, std::size_t n, std::size_t d, double epsilon, double gamma,
                         double delta);
inline ClassParams class_params(const EstimatorConfig& cfg, std::size_t n, std::size_t d) {
    return class_params(cfg, n, d, cfg.epsilon, cfg.gamma, cfg.delta);
}

// Per coordinate, the median of the present values. Throws EmptyCoordinate.
std::vector<double> coordinate_median(const IncompleteMatrix& m);
// Per coordinate, the plain mean of the present values. Throws EmptyCoordinate.
std::vector<double> present_entry_mean(const IncompleteMatrix& m);

// sqrt(C6 beta^2 eps' + (1 - c7 g*) rho^2). c7 g* >= 1 is clamped to 1 - 1e-6
// and reported through *clamped.
double rho_update(double rho, const ClassParams& cp, const EstimatorConfig& cfg, bool* clamped = nullptr);

// Iterations for the potential rho^2 - C6 beta^2 eps'/(c7 g*) to shrink from
// rho0^2 to at most C6 beta^2 eps', and at least ceil(2 log2(N + 1)).
std::size_t iteration_cap(std::size_t n, double rho0, const ClassParams& cp, const EstimatorConfig& cfg);

struct IterationRecord {
    std::size_t t = 0;
    std::vector<double> nu;
    double rho = 0.0;
    double time_ms = 0.0;
    std::size_t filter_rounds = 0;
    double removed_mass = 0.0;
};

struct IterationTrace {
    double rho0 = 0.0;
    std::vector<IterationRecord> iterations;
    std::vector<double> nu_star;
    double rho_star = 0.0;
    std::size_t iteration_cap = 0;
    bool hit_cap = false;
    bool hashed = false;
    ClassParams params;
    std::vector<std::string> warnings;

    // Header "t,rho,time_ms"; t = 0 is the initial rho.
    std::string to_csv() const;
};

struct EstimateResult {
    std::vector<double> nu;
    IterationTrace trace;
};

// Throws NotGammaComplete, EmptyCoordinate or ConfigError.
EstimateResult estimate_mean(const IncompleteMatrix& m, const EstimatorConfig& cfg);

struct HashParams {
    double epsilon_prime = 0.0;
    double gamma_prime = 0.0;
    std::size_t n_prime = 0;
    bool passthrough = false;
};

// eps' = eps / (B gamma), gamma' = (B - 2) / B^2, N' = B ceil(gamma N).
// Pass-through (unchanged parameters) when gamma >= threshold.
HashParams hash_parameters(std::size_t n, double epsilon, double gamma, std::size_t B, double threshold = 0.0);

struct HashResult {
    IncompleteMatrix matrix;
    HashParams params;
    // 0-based target row of every input row; empty on pass-through.
    std::vector<std::size_t> assignment;
};

// New row r, coordinate j: the value from the smallest input row i with
// h(i) = r and coordinate j present; missing if none. h is 0-based.
IncompleteMatrix hash_combine(const IncompleteMatrix& m, std::span<const std::size_t> h, std::size_t n_prime);

HashResult hash_preprocess(const IncompleteMatrix& m, double epsilon, double gamma, std::size_t B,
                           std::uint64_t seed, double threshold = 0.0);

// floor(gamma N) x d matrix whose column j holds the first floor(gamma N)
// present values of column j in row order. Throws NotGammaComplete.
Matrix stacking_transform(const IncompleteMatrix& m, double gamma);

}  // namespace rime
