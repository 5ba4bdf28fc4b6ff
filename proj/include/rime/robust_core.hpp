#pragma once

// Robust mean estimation on complete data.
//
// robust_mean_complete is a spectral downweighting filter wrapped in naive
// pruning: rows far from the coordinate-wise median are dropped, then rows
// with large projections on the top eigenvector of the weighted centered
// second moment are softly downweighted until that eigenvalue is within
// beta^2 of eta^2 or twice the corruption budget has been removed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rime/dataset.hpp"
#include "rime/linalg.hpp"

namespace rime {

// Element of Delta_{G,p}: nonnegative, sums to 1, zero outside G, each entry
// at most 1/p.
struct WeightVector {
    std::vector<std::size_t> support;  // G, sorted
    std::vector<double> weights;       // length N
    double cap_p = 1.0;

    static WeightVector uniform(std::size_t n, std::vector<std::size_t> support);

    double sum() const noexcept;
    // Checks all three simplex conditions; sums within tol of 1.
    bool in_simplex(double tol = 1e-12) const;
};

// w~ = (|G| / (|G| - p)) w_G - (p / (|G| - p)) w, so that
// (p/|G|) w + ((|G|-p)/|G|) w~ = w_G. The result has cap |G| - p; applying
// the map again returns w. Requires 0 < p < |G|.
WeightVector pair_weights(const WeightVector& w);

struct PruneResult {
    std::vector<std::size_t> retained;
    std::vector<double> center;
    double radius = 0.0;
};

// Drops rows farther than sqrt(N) times the (1 - 2 epsilon) distance
// quantile from the coordinate-wise median. epsilon = 0 keeps every row.
PruneResult naive_prune(const RowSource& rows, double epsilon);

enum class ScoreBackend { exact_spectral, sketched_que };

struct ScoreOptions {
    double eta = 0.0;
    double delta = 0.1;
    std::uint64_t seed = 0;
    // Random probes for the sketched backend; 0 picks ceil(4 ln(d / delta)).
    std::size_t probes = 0;
};

// Per-row nonnegative outlier scores with respect to the weighted centered
// second moment. exact-spectral: <x_i - c, v>^2 for the top eigenvector v
// (||x_i - c||^2 / d when the second moment is a multiple of I).
// sketched-que: quadratic forms against a matrix-exponential polynomial of
// the second moment minus eta^2 I, estimated with random probes.
// Throws ConvergenceError when the eigensolver does not converge.
std::vector<double> outlier_scores(const RowSource& rows, std::span<const double> weights,
                                   std::span<const double> center, ScoreBackend backend,
                                   const ScoreOptions& opts = {});

struct RobustMeanParams {
    double epsilon = 0.0;
    double eta = 0.0;
    double delta = 0.1;
    // Goodness level; defaults to subgaussian_beta(N, d, epsilon, delta, 3).
    std::optional<double> beta;
    ScoreBackend backend = ScoreBackend::exact_spectral;
    std::size_t max_filter_rounds = 64;
    // Regime limit on epsilon, and the constant in the error contract
    // ||nu - mu||^2 <= C2 beta^2 epsilon.
    double c1 = 0.1;
    double C2 = 10.0;
    bool hard_removal = false;
    // Independent repetitions combined by coordinate-wise median. 0 picks
    // ceil(log2(1/delta)) for the sketched backend and 1 for exact-spectral.
    std::size_t repetitions = 0;
    std::size_t sketch_probes = 0;
    std::uint64_t seed = 0;
};

struct FilterRound {
    std::size_t round = 0;
    double top_eigenvalue = 0.0;
    double removed_mass = 0.0;
    // top_eigenvalue holds the trace, an upper bound, and no eigensolve ran.
    bool trace_bound = false;
};

struct FilterState {
    WeightVector weights;
    std::vector<double> center;
    double removed_mass = 0.0;
    std::size_t iteration = 0;
    std::size_t pruned = 0;
    bool epsilon_above_regime = false;
    bool eigensolver_unconverged = false;
    std::vector<FilterRound> rounds;
    // Snapshot of the weights after every downweighting round (when
    // requested through record_weights).
    std::vector<WeightVector> weight_history;

    // One line per round: "round,top_eigenvalue,removed_mass".
    std::string diagnostic_text() const;
};

struct RobustMeanResult {
    std::vector<double> nu;
    FilterState state;
};

// beta_calibration * sqrt((d + ln(1/delta)) / (N eps) + eps ln(1/eps)).
// Infinite when epsilon = 0.
double subgaussian_beta(std::size_t n, std::size_t d, double epsilon, double delta,
                        double calibration = 3.0);

// Throws std::invalid_argument on an empty input; flags epsilon > c1 in the
// returned state instead of failing.
RobustMeanResult robust_mean_complete(const RowSource& rows, const RobustMeanParams& params,
                                      bool record_weights = false);

struct GoodnessProbeReport {
    double max_mean_deviation = 0.0;
    double max_spectral_deviation = 0.0;
};

// Evaluates the two goodness inequalities at the uniform weights and at
// weight_samples uniform distributions over random ceil((1 - 3 eps) N)-subsets.
// A violation proves the data is not good; passing is only evidence.
GoodnessProbeReport goodness_probe(const RowSource& rows, std::span<const double> mu, double epsilon,
                                   double eta, std::size_t weight_samples, std::uint64_t seed);

}  // namespace rime
