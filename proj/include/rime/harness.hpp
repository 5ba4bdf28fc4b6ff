#pragma once

// Experiment runner: scenario grids, estimator variants and baselines, CSV
// results, and the hashing-failure and selective-presence demos.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rime/kv_config.hpp"

namespace rime {

enum class Variant { full, median_only, stacking_filter, hash_filter, present_entry_mean };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

// Grid file keys (comma-separated lists where noted):
//   d, N, gamma, epsilon       lists
//   class                      list of p1:<eta> | p2 | p2:capped | p2:rademacher | p2:two_point
//   strategy                   list of adversary names
//   variants                   list (default full)
//   reps, seed, delta, scale, magnitude, presence, iterations
struct ExperimentSpec {
    std::vector<std::size_t> d;
    std::vector<std::size_t> n;
    std::vector<double> gamma;
    std::vector<double> epsilon;
    std::vector<std::string> classes;
    std::vector<std::string> strategies;
    std::vector<Variant> variants{Variant::full};
    std::size_t reps = 1;
    std::uint64_t seed = 0;
    double delta = 0.1;
    double scale = 1e3;
    double magnitude = 0.0;
    std::string presence = "uniform";
    std::size_t iterations = 0;

    std::size_t cell_count() const noexcept;

    static ExperimentSpec parse(const KvConfig& cfg);
    static ExperimentSpec load(const std::filesystem::path& path);
};

struct Cell {
    std::size_t d = 0;
    std::size_t n = 0;
    double gamma = 0.0;
    double epsilon = 0.0;
    std::string cls;
    std::string strategy;
};

// Cells enumerate d, N, gamma, epsilon, class, strategy with strategy fastest.
Cell cell_at(const ExperimentSpec& spec, std::size_t index);

struct ResultRow {
    Cell cell;
    Variant variant = Variant::full;
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    double l2_error = 0.0;
    double g_error = 0.0;
    std::size_t iters = 0;
    double time_ms = 0.0;
    std::string status = "ok";

    // Full variant only. Largest |s_{t+1} - (1 - c7 g*) s_t| over the run,
    // relative to max(rho_t^2, rho_{t+1}^2).
    double potential_residual = 0.0;
    // ||err||_2^2 <= ||err||_g^2 / g* with the true g.
    bool g_bound_holds = true;
    bool hit_cap = false;
    std::vector<double> rho;
};

// Header: d,N,gamma,epsilon,class,strategy,variant,rep,seed,l2_error,g_error,iters,time_ms,status
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);

// All variants for one (cell, rep). Failures become rows with an error status.
std::vector<ResultRow> run_cell(const ExperimentSpec& spec, std::size_t cell, std::size_t rep);

// Every (cell, rep) in a thread pool; rows in (cell, rep, variant) order.
// threads = 0 uses the hardware concurrency.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::size_t threads = 0);

// Whitespace table of median l2 error per (cell, variant), for gnuplot.
void write_summary(std::ostream& out, const std::vector<ResultRow>& rows);

struct HashingFailureReport {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t n_prime = 0;
    double gamma = 0.0;
    double C = 0.0;
    double missing_fraction = 0.0;
    // e^{-4C}, the prediction line, and e^{-4C-2}, the claimed floor.
    double prediction = 0.0;
    double lower_bound = 0.0;
    // Mean over new rows of (1 - 2 gamma)^{bucket size}.
    double expected_fraction = 0.0;
};

// Entries present independently with probability 2 gamma; rows hashed
// uniformly into N' = max(1, round(gamma N / C)) new rows.
HashingFailureReport hashing_failure_demo(std::size_t n, std::size_t d, double gamma, double C, std::uint64_t seed);

struct SelectivePresenceReport {
    double estimator_error = 0.0;
    double median_error = 0.0;
    double present_mean_error = 0.0;
};

// An adversary outside the model that, after seeing the clean P1(1) data,
// reveals for every coordinate only the ceil(gamma N) largest values. No
// estimator using the revealed entries can recover mu.
SelectivePresenceReport selective_presence_demo(std::size_t n, std::size_t d, double gamma, std::uint64_t seed);

}  // namespace rime
