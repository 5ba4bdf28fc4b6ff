// rime: generate / estimate / experiment / hashdemo

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rime/dataset_io.hpp"
#include "rime/errors.hpp"
#include "rime/estimator.hpp"
#include "rime/generation.hpp"
#include "rime/harness.hpp"
#include "rime/kv_config.hpp"

namespace {

constexpr int exit_other = 1;
constexpr int exit_not_complete = 2;
constexpr int exit_config = 3;

rime::EstimatorConfig parse_class_option(const std::string& cls, rime::EstimatorConfig cfg) {
    if (cls == "p2") {
        cfg.dist_class = rime::DistClass::p2;
        cfg.eta = 0.0;
        return cfg;
    }
    if (cls.rfind("p1:", 0) == 0) {
        cfg.dist_class = rime::DistClass::p1;
        cfg.eta = rime::parse_double(cls.substr(3), "eta");
        return cfg;
    }
    if (cls == "p1") {
        cfg.dist_class = rime::DistClass::p1;
        cfg.eta = 1.0;
        return cfg;
    }
    throw rime::ConfigError("--class must be p1:<eta> or p2");
}

void write_truth(const std::string& path, const rime::GroundTruth& gt) {
    std::ofstream out(path);
    if (!out) throw rime::FormatError("cannot write " + path);
    out << "mu = " << rime::format_vector(gt.mu) << '\n';
    out << "corrupted_rows = ";
    for (std::size_t k = 0; k < gt.corrupted_rows.size(); ++k) {
        out << (k ? "," : "") << gt.corrupted_rows[k] + 1;
    }
    out << '\n' << "seed = " << gt.seed << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust mean estimation on incomplete data with outliers"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Synthesize a corrupted incomplete dataset from a scenario file");
    std::string scenario_path, out_path, format = "csv", truth_path;
    gen->add_option("--scenario", scenario_path, "Scenario file (key = value)")->required();
    gen->add_option("--out", out_path, "Output matrix file")->required();
    gen->add_option("--format", format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
    gen->add_option("--truth", truth_path, "Write the ground truth (mu, corrupted rows) here");

    auto* est = app.add_subcommand("estimate", "Estimate the mean of an incomplete dataset");
    std::string data_path, cls = "p1:1", trace_path, backend = "exact";
    double epsilon = 0.0, gamma = 1.0, delta = 0.1;
    std::size_t hash_b = 0, iterations = 0;
    bool hard_removal = false;
    std::uint64_t seed = 0;
    est->add_option("--data", data_path, "Matrix file (csv or binary)")->required();
    est->add_option("--epsilon", epsilon, "Corruption fraction")->required();
    est->add_option("--gamma", gamma, "Completeness level")->required();
    est->add_option("--delta", delta, "Failure probability");
    est->add_option("--class", cls, "p1:<eta> or p2");
    est->add_option("--hash-B", hash_b, "Enable random hashing with this B (>= 3)");
    est->add_option("--seed", seed, "Seed");
    est->add_option("--iterations", iterations, "Override the iteration count");
    est->add_option("--backend", backend, "exact or sketched")->check(CLI::IsMember({"exact", "sketched"}));
    est->add_flag("--hard-removal", hard_removal, "Remove flagged rows outright instead of downweighting");
    est->add_option("--trace", trace_path, "Write the rho trace (t,rho,time_ms) here");

    auto* exp = app.add_subcommand("experiment", "Run an experiment grid");
    std::string spec_path, csv_path, summary_path;
    std::size_t threads = 0;
    exp->add_option("--spec", spec_path, "Experiment spec file")->required();
    exp->add_option("--out", csv_path, "Result CSV")->required();
    exp->add_option("--threads", threads, "Worker threads (0 = all cores)");
    exp->add_option("--summary", summary_path, "Median-error summary table");

    auto* hd = app.add_subcommand("hashdemo", "Missing-entry fraction after hashing into gamma N / C rows");
    double C = 1.0, hd_gamma = 0.05;
    std::size_t hd_n = 20000, hd_d = 1000;
    std::uint64_t hd_seed = 0;
    hd->add_option("--C", C, "Compression constant")->required();
    hd->add_option("--gamma", hd_gamma, "Half the presence probability")->required();
    hd->add_option("--n", hd_n, "Examples")->required();
    hd->add_option("--d", hd_d, "Coordinates")->required();
    hd->add_option("--seed", hd_seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (*gen) {
            const auto sc = rime::load_scenario(scenario_path);
            const auto inst = rime::realize(sc);
            rime::store_matrix(inst.observed, out_path,
                               format == "bin" ? rime::MatrixFormat::binary : rime::MatrixFormat::csv);
            if (!truth_path.empty()) write_truth(truth_path, inst.truth);
        } else if (*est) {
            const auto m = rime::load_matrix(data_path);
            rime::EstimatorConfig cfg;
            cfg.epsilon = epsilon;
            cfg.gamma = gamma;
            cfg.delta = delta;
            cfg.seed = seed;
            cfg.iterations = iterations;
            cfg.hard_removal = hard_removal;
            cfg.backend = backend == "sketched" ? rime::ScoreBackend::sketched_que : rime::ScoreBackend::exact_spectral;
            if (hash_b > 0) {
                cfg.hashing.enabled = true;
                cfg.hashing.B = hash_b;
            }
            cfg = parse_class_option(cls, cfg);
            const auto res = rime::estimate_mean(m, cfg);
            for (const auto& w : res.trace.warnings) std::cerr << "warning: " << w << '\n';
            if (res.trace.hit_cap) std::cerr << "note: iteration cap " << res.trace.iteration_cap << " reached\n";
            std::cout << rime::format_vector(res.nu) << '\n';
            if (!trace_path.empty()) {
                std::ofstream out(trace_path);
                if (!out) throw rime::FormatError("cannot write " + trace_path);
                out << res.trace.to_csv();
            }
        } else if (*exp) {
            const auto spec = rime::ExperimentSpec::load(spec_path);
            const auto rows = rime::run_experiment(spec, threads);
            std::ofstream out(csv_path);
            if (!out) throw rime::FormatError("cannot write " + csv_path);
            rime::write_results_csv(out, rows);
            if (!summary_path.empty()) {
                std::ofstream s(summary_path);
                if (!s) throw rime::FormatError("cannot write " + summary_path);
                rime::write_summary(s, rows);
            }
        } else if (*hd) {
            const auto r = rime::hashing_failure_demo(hd_n, hd_d, hd_gamma, C, hd_seed);
            std::cout << "n = " << r.n << '\n'
                      << "d = " << r.d << '\n'
                      << "n_prime = " << r.n_prime << '\n'
                      << "missing_fraction = " << r.missing_fraction << '\n'
                      << "expected_fraction = " << r.expected_fraction << '\n'
                      << "prediction_exp_minus_4C = " << r.prediction << '\n'
                      << "lower_bound_exp_minus_4C_minus_2 = " << r.lower_bound << '\n';
        }
    } catch (const rime::NotGammaComplete& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_not_complete;
    } catch (const rime::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_other;
    }
    return 0;
}
