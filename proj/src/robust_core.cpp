#include "rime/robust_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "rime/dataset_io.hpp"
#include "rime/errors.hpp"
#include "rime/rng.hpp"
#include "rime/simd.hpp"

namespace rime {

WeightVector WeightVector::uniform(std::size_t n, std::vector<std::size_t> support) {
    if (support.empty()) throw std::invalid_argument("uniform weights need a non-empty support");
    std::sort(support.begin(), support.end());
    WeightVector w;
    w.weights.assign(n, 0.0);
    const double each = 1.0 / static_cast<double>(support.size());
    for (auto i : support) w.weights.at(i) = each;
    w.cap_p = static_cast<double>(support.size());
    w.support = std::move(support);
    return w;
}

double WeightVector::sum() const noexcept {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

bool WeightVector::in_simplex(double tol) const {
    std::vector<std::uint8_t> in_g(weights.size(), 0);
    for (auto i : support) {
        if (i >= weights.size()) return false;
        in_g[i] = 1;
    }
    const double cap = 1.0 / cap_p;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (!(w >= 0.0)) return false;
        if (!in_g[i] && w != 0.0) return false;
        if (w > cap * (1.0 + tol)) return false;
    }
    return std::abs(sum() - 1.0) <= tol;
}

WeightVector pair_weights(const WeightVector& w) {
    const double g = static_cast<double>(w.support.size());
    const double p = w.cap_p;
    if (!(p > 0.0) || !(p < g)) throw std::invalid_argument("pair_weights needs 0 < p < |G|");
    WeightVector out;
    out.support = w.support;
    out.weights.assign(w.weights.size(), 0.0);
    out.cap_p = g - p;
    const double rest = g - p;
    for (auto i : w.support) {
        // (|G|/(|G|-p)) * (1/|G|) - (p/(|G|-p)) w_i
        out.weights[i] = (1.0 - p * w.weights[i]) / rest;
    }
    return out;
}

namespace {

PruneResult prune_about(const RowSource& rows, std::vector<double> center, double epsilon) {
    const std::size_t n = rows.rows();
    const std::size_t d = rows.dims();
    PruneResult out;
    out.center = std::move(center);
    std::vector<double> dist(n);
    std::vector<double> scratch(d);
    const auto& k = simd::kernels();
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::sqrt(k.squared_distance(rows.row(i, scratch.data()), out.center.data(), d));
    }
    if (epsilon <= 0.0) {
        out.radius = std::numeric_limits<double>::infinity();
        out.retained.resize(n);
        std::iota(out.retained.begin(), out.retained.end(), std::size_t{0});
        return out;
    }
    std::vector<double> sorted = dist;
    const double level = std::clamp(1.0 - 2.0 * epsilon, 0.0, 1.0);
    std::size_t rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
    out.radius = std::sqrt(static_cast<double>(n)) * sorted[rank];
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] <= out.radius) out.retained.push_back(i);
    }
    return out;
}

}  // namespace

PruneResult naive_prune(const RowSource& rows, double epsilon) {
    if (rows.rows() == 0) throw std::invalid_argument("naive_prune on an empty dataset");
    return prune_about(rows, coordinate_median(rows), epsilon);
}

namespace {

std::vector<double> random_direction(std::size_t d, std::uint64_t key) {
    rng::Stream s(key);
    std::vector<double> v(d);
    for (auto& x : v) x = s.normal();
    return v;
}

// Start = unit random vector, plus the unit warm vector when given. The
// random half keeps the resolution bound of power_iteration valid.
EigenEstimate top_eigen(const SecondMomentOperator& op, std::uint64_t key, double resolve_below,
                        std::span<const double> warm = {}) {
    PowerIterationOptions opts;
    opts.resolve_below = resolve_below;
    auto start = random_direction(op.dims(), key);
    const double rn = norm2(start);
    for (auto& x : start) x /= rn;
    if (!warm.empty()) {
        const double wn = norm2(warm);
        if (wn > 0.0) {
            for (std::size_t j = 0; j < start.size(); ++j) start[j] += warm[j] / wn;
        }
    }
    return power_iteration([&](std::span<const double> v, std::span<double> out) { op.apply(v, out); },
                           start, opts);
}

bool isotropic(double lambda, double trace, std::size_t d) {
    return lambda <= (1.0 + 1e-9) * trace / static_cast<double>(d);
}

std::vector<double> isotropic_scores(const RowSource& rows, std::span<const double> center) {
    const std::size_t d = rows.dims();
    std::vector<double> s(rows.rows());
    std::vector<double> scratch(d);
    const auto& k = simd::kernels();
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = k.squared_distance(rows.row(i, scratch.data()), center.data(), d) / static_cast<double>(d);
    }
    return s;
}

std::vector<double> direction_scores(const SecondMomentOperator& op, std::size_t n,
                                     std::span<const double> v) {
    std::vector<double> s(n);
    op.projections(v, s);
    for (auto& x : s) x *= x;
    return s;
}

std::size_t probe_count(std::size_t d, double delta, std::size_t requested) {
    if (requested > 0) return requested;
    const double k = std::ceil(4.0 * std::log(static_cast<double>(d) / std::max(delta, 1e-300)));
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 8, 64);
}

// Y = (I + a (M - I))^q G with M = (S - eta^2 I)/s, so that the base has
// spectrum in [0, 1] and approximates exp(alpha (M - I) / 2).
std::vector<double> que_scores(const RowSource& rows, const SecondMomentOperator& op,
                               std::span<const double> center, double lambda, double eta,
                               std::size_t probes, std::uint64_t key) {
    const std::size_t d = rows.dims();
    const std::size_t n = rows.rows();
    const double eta2 = eta * eta;
    const double s = std::max(lambda - eta2, 0.05 * lambda);
    const double alpha = 4.0 * std::log(static_cast<double>(d) + 1.0);
    const double span_x = 0.5 * alpha * (1.0 + eta2 / s);
    const std::size_t q = static_cast<std::size_t>(std::ceil(span_x)) + 2;
    const double a = 0.5 * alpha / static_cast<double>(q);

    std::vector<double> y(probes * d);
    rng::Stream st(key);
    for (auto& x : y) x = st.normal();
    std::vector<double> sy(probes * d);
    for (std::size_t it = 0; it < q; ++it) {
        op.apply_block(y, probes, sy);
        for (std::size_t t = 0; t < y.size(); ++t) {
            const double my = (sy[t] - eta2 * y[t]) / s;
            y[t] += a * (my - y[t]);
        }
        // Rescale to keep magnitudes bounded; scores are normalized anyway.
        const double mx = std::sqrt(simd::kernels().dot(y.data(), y.data(), y.size()));
        if (mx > 0.0) {
            for (auto& x : y) x /= mx;
        }
    }
    const double total = simd::kernels().dot(y.data(), y.data(), y.size());
    std::vector<double> out(n, 0.0);
    if (total <= 0.0) return out;
    std::vector<double> scratch(d);
    const auto& k = simd::kernels();
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = rows.row(i, scratch.data());
        double acc = 0.0;
        for (std::size_t l = 0; l < probes; ++l) {
            const double t = k.centered_dot(x, center.data(), y.data() + l * d, d);
            acc += t * t;
        }
        out[i] = acc / total;
    }
    return out;
}

std::vector<double> scores_given_eigen(const RowSource& rows, const SecondMomentOperator& op,
                                       std::span<const double> center, const EigenEstimate& est,
                                       ScoreBackend backend, double eta, std::size_t probes,
                                       std::uint64_t key) {
    const double tr = op.trace();
    if (est.value <= 0.0 || isotropic(est.value, tr, rows.dims())) return isotropic_scores(rows, center);
    if (backend == ScoreBackend::exact_spectral) return direction_scores(op, rows.rows(), est.vector);
    return que_scores(rows, op, center, est.value, eta, probes, key);
}

void check_weights(const RowSource& rows, std::span<const double> weights, std::span<const double> center) {
    if (weights.size() != rows.rows()) throw std::invalid_argument("weight vector has wrong length");
    if (center.size() != rows.dims()) throw std::invalid_argument("center has wrong length");
}

}  // namespace

std::vector<double> outlier_scores(const RowSource& rows, std::span<const double> weights,
                                   std::span<const double> center, ScoreBackend backend,
                                   const ScoreOptions& opts) {
    check_weights(rows, weights, center);
    const SecondMomentOperator op(rows, weights, center);
    const auto est = top_eigen(op, rng::derive(opts.seed, rng::Purpose::filter), 0.0);
    if (!est.converged) throw ConvergenceError("power iteration did not converge", est.residual);
    return scores_given_eigen(rows, op, center, est, backend, opts.eta,
                              probe_count(rows.dims(), opts.delta, opts.probes),
                              rng::derive(opts.seed, rng::Purpose::probe));
}

double subgaussian_beta(std::size_t n, std::size_t d, double epsilon, double delta, double calibration) {
    if (!(epsilon > 0.0)) return std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    const double v = (static_cast<double>(d) + std::log(1.0 / delta)) / (nn * epsilon) +
                     epsilon * std::log(1.0 / epsilon);
    return calibration * std::sqrt(std::max(v, 0.0));
}

std::string FilterState::diagnostic_text() const {
    std::ostringstream os;
    for (const auto& r : rounds) {
        os << r.round << ',' << format_vector(std::span<const double>(&r.top_eigenvalue, 1)) << ','
           << format_vector(std::span<const double>(&r.removed_mass, 1)) << '\n';
    }
    return os.str();
}

namespace {

WeightVector normalized(const std::vector<double>& u, const std::vector<std::size_t>& support, double cap_p) {
    WeightVector w;
    w.support = support;
    w.cap_p = cap_p;
    const double total = std::accumulate(u.begin(), u.end(), 0.0);
    w.weights.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) w.weights[i] = u[i] / total;
    return w;
}

RobustMeanResult filter_once(const RowSource& rows, const std::vector<double>& median, const RobustMeanParams& params,
                             double beta, std::uint64_t seed, bool record_weights) {
    const std::size_t n = rows.rows();
    const std::size_t d = rows.dims();
    const double nn = static_cast<double>(n);
    const double eps = std::max(params.epsilon, 0.0);
    const double eta2 = params.eta * params.eta;
    const double thr = beta * beta;

    RobustMeanResult res;
    FilterState& st = res.state;
    st.epsilon_above_regime = params.epsilon > params.c1;

    const auto pruned = prune_about(rows, median, eps);
    std::vector<double> u(n, 0.0);
    for (auto i : pruned.retained) u[i] = 1.0;
    st.pruned = n - pruned.retained.size();
    const double cap_p = std::max(1.0, (1.0 - 2.0 * eps) * nn);
    // Mass budget over all N rows, pruning included.
    const double budget = 2.0 * eps * nn;
    double removed = static_cast<double>(st.pruned);

    std::vector<double> center = weighted_mean(rows, u);
    const std::size_t probes = probe_count(d, params.delta, params.sketch_probes);
    const std::uint64_t fkey = rng::derive(seed, rng::Purpose::filter);
    const std::uint64_t pkey = rng::derive(seed, rng::Purpose::probe);
    std::vector<double> warm;

    for (std::size_t round = 0; round < params.max_filter_rounds; ++round) {
        st.iteration = round + 1;
        if (removed >= budget) break;
        const SecondMomentOperator op(rows, u, center);
        // The top eigenvalue never exceeds the trace.
        const double tr = op.trace();
        if (tr - eta2 <= thr) {
            st.rounds.push_back({round + 1, tr, removed / nn, true});
            break;
        }
        const auto est = top_eigen(op, rng::derive(fkey, round), eta2 + thr, warm);
        warm = est.vector;
        st.rounds.push_back({round + 1, est.value, removed / nn, false});
        if (est.resolved_below || est.value - eta2 <= thr) {
            if (!est.converged && !est.resolved_below) st.eigensolver_unconverged = true;
            break;
        }
        if (!est.converged) st.eigensolver_unconverged = true;

        const auto tau = scores_given_eigen(rows, op, center, est, params.backend, params.eta, probes,
                                            rng::derive(pkey, round));
        const double cut = eta2 + thr;
        double tau_max = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (u[i] > 0.0) tau_max = std::max(tau_max, tau[i]);
        }
        if (!(tau_max > cut)) break;

        std::vector<double> frac(n, 0.0);
        double proposed = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (u[i] <= 0.0 || !(tau[i] > cut)) continue;
            frac[i] = params.hard_removal ? 1.0 : tau[i] / tau_max;
            proposed += u[i] * frac[i];
        }
        bool exhausted = false;
        const double room = budget - removed;
        double scale = 1.0;
        if (proposed > room) {
            scale = room / proposed;
            exhausted = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (frac[i] == 0.0) continue;
            const double f = frac[i] * scale;
            const double before = u[i];
            u[i] = f >= 1.0 ? 0.0 : u[i] * (1.0 - f);
            removed += before - u[i];
        }
        center = weighted_mean(rows, u);
        if (record_weights) st.weight_history.push_back(normalized(u, pruned.retained, cap_p));
        if (exhausted) break;
    }
    st.removed_mass = removed / nn;
    st.center = center;
    st.weights = normalized(u, pruned.retained, cap_p);
    res.nu = std::move(center);
    return res;
}

}  // namespace

RobustMeanResult robust_mean_complete(const RowSource& rows, const RobustMeanParams& params,
                                      bool record_weights) {
    const std::size_t n = rows.rows();
    const std::size_t d = rows.dims();
    if (n == 0 || d == 0) throw std::invalid_argument("robust_mean_complete on an empty dataset");
    if (!(params.delta > 0.0 && params.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(params.epsilon >= 0.0 && params.epsilon < 0.5)) throw ConfigError("epsilon must lie in [0, 1/2)");
    const double beta = params.beta ? *params.beta : subgaussian_beta(n, d, params.epsilon, params.delta);
    if (!(beta >= 0.0)) throw ConfigError("beta must be nonnegative");

    std::size_t reps = params.repetitions;
    if (reps == 0) {
        reps = params.backend == ScoreBackend::sketched_que
                   ? static_cast<std::size_t>(std::max(1.0, std::ceil(std::log2(1.0 / params.delta))))
                   : 1;
    }
    // Medians come from the source (which may have a fast path); every pass
    // after that reads a dense copy.
    const std::vector<double> median = rows.column_medians();
    std::optional<Matrix> dense;
    if (!rows.contiguous()) dense = materialize(rows);
    const DenseRows dense_rows(dense ? dense->values() : std::span<const double>{}, n, d);
    const RowSource& src = dense ? static_cast<const RowSource&>(dense_rows) : rows;

    if (reps == 1) return filter_once(src, median, params, beta, params.seed, record_weights);

    std::vector<RobustMeanResult> runs;
    runs.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        runs.push_back(filter_once(src, median, params, beta, rng::derive(params.seed, r), record_weights));
    }
    std::vector<double> med(d);
    std::vector<double> col(reps);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t r = 0; r < reps; ++r) col[r] = runs[r].nu[j];
        med[j] = median_inplace(col);
    }
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < reps; ++r) {
        const double dist = distance2(runs[r].nu, med);
        if (dist < best_dist) {
            best_dist = dist;
            best = r;
        }
    }
    RobustMeanResult out = std::move(runs[best]);
    out.nu = std::move(med);
    return out;
}

GoodnessProbeReport goodness_probe(const RowSource& rows, std::span<const double> mu, double epsilon,
                                   double eta, std::size_t weight_samples, std::uint64_t seed) {
    const std::size_t n = rows.rows();
    const std::size_t d = rows.dims();
    if (mu.size() != d) throw std::invalid_argument("goodness_probe: mu has wrong length");
    GoodnessProbeReport rep;
    const auto evaluate = [&](const std::vector<double>& u) {
        const auto mean = weighted_mean(rows, u);
        rep.max_mean_deviation = std::max(rep.max_mean_deviation, distance2(mean, mu));
        Matrix s = second_moment_matrix(rows, u, mu);
        for (std::size_t j = 0; j < d; ++j) s(j, j) -= eta * eta;
        rep.max_spectral_deviation = std::max(rep.max_spectral_deviation, symmetric_operator_norm(s));
    };
    evaluate(std::vector<double>(n, 1.0));

    const double frac = std::clamp(1.0 - 3.0 * epsilon, 0.0, 1.0);
    const std::size_t m = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9)), 1, n);
    std::vector<std::size_t> perm(n);
    rng::Stream s(rng::derive(seed, rng::Purpose::experiment));
    for (std::size_t t = 0; t < weight_samples; ++t) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = 0; i < m; ++i) {
            std::swap(perm[i], perm[i + s.below(n - i)]);
        }
        std::vector<double> u(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) u[perm[i]] = 1.0;
        evaluate(u);
    }
    return rep;
}

}  // namespace rime
