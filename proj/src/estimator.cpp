#include "rime/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "rime/completion.hpp"
#include "rime/dataset_io.hpp"
#include "rime/errors.hpp"
#include "rime/linalg.hpp"
#include "rime/rng.hpp"

namespace rime {

void EstimatorConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in [0, 1/2)");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta must lie in (0, 1/2)");
    if (dist_class == DistClass::p1 && !(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
    for (double c : {C6, c7, beta_calibration, C_median, C0}) {
        if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("calibration constants must be positive and finite");
    }
    if (!(C3 >= 0.0) || !(C4 >= 0.0)) throw ConfigError("C3 and C4 must be nonnegative");
    if (hashing.enabled && hashing.B < 3) throw ConfigError("hashing needs B >= 3");
}

ClassParams class_params(const EstimatorConfig& cfg, std::size_t n, std::size_t d, double epsilon, double gamma,
                         double delta) {
    ClassParams cp;
    const double nn = static_cast<double>(n);
    const double dd = static_cast<double>(d);
    const double cal2 = cfg.beta_calibration * cfg.beta_calibration;
    cp.g_star = 0.9 * gamma;
    if (cfg.dist_class == DistClass::p1) {
        cp.epsilon_prime = epsilon;
        cp.eta = cfg.eta;
        const double lead = (dd + std::log(1.0 / delta)) / nn;
        const double tail = epsilon > 0.0 ? epsilon * epsilon * std::log(1.0 / epsilon) : 0.0;
        cp.beta2_eps = cal2 * (lead + tail);
        cp.beta = epsilon > 0.0 ? std::sqrt(cp.beta2_eps / epsilon) : std::numeric_limits<double>::infinity();
    } else {
        cp.epsilon_prime = 1.1 * epsilon;
        cp.eta = 0.0;
        const double lead = dd * std::log(dd / delta) / nn;
        cp.beta2_eps = cal2 * 1.1 * (lead + epsilon);
        cp.beta = epsilon > 0.0 ? std::sqrt(cp.beta2_eps / cp.epsilon_prime) : std::numeric_limits<double>::infinity();
    }
    return cp;
}

namespace {

template <class Reduce>
std::vector<double> per_column(const IncompleteMatrix& m, Reduce reduce) {
    const std::size_t n = m.n_examples();
    const std::size_t d = m.n_dims();
    std::vector<std::vector<double>> cols(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto mask = m.mask_row(i);
        const auto raw = m.raw_row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (mask[j]) cols[j].push_back(raw[j]);
        }
    }
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        if (cols[j].empty()) throw EmptyCoordinate(j);
        out[j] = reduce(cols[j]);
    }
    return out;
}

}  // namespace

std::vector<double> coordinate_median(const IncompleteMatrix& m) {
    return per_column(m, [](std::vector<double>& c) { return median_inplace(c); });
}

std::vector<double> present_entry_mean(const IncompleteMatrix& m) {
    return per_column(m, [](std::vector<double>& c) {
        double s = 0.0;
        for (double x : c) s += x;
        return s / static_cast<double>(c.size());
    });
}

namespace {

double contraction(const ClassParams& cp, const EstimatorConfig& cfg, bool* clamped) {
    double c = cfg.c7 * cp.g_star;
    if (c >= 1.0) {
        c = 1.0 - 1e-6;
        if (clamped) *clamped = true;
    }
    return c;
}

}  // namespace

double rho_update(double rho, const ClassParams& cp, const EstimatorConfig& cfg, bool* clamped) {
    if (clamped) *clamped = false;
    const double c = contraction(cp, cfg, clamped);
    return std::sqrt(cfg.C6 * cp.beta2_eps + (1.0 - c) * rho * rho);
}

std::size_t iteration_cap(std::size_t n, double rho0, const ClassParams& cp, const EstimatorConfig& cfg) {
    const auto by_n = static_cast<std::size_t>(std::ceil(2.0 * std::log2(static_cast<double>(n) + 1.0)));
    const double c = contraction(cp, cfg, nullptr);
    const double floor_term = cfg.C6 * cp.beta2_eps;
    if (!(floor_term > 0.0) || !(c > 0.0)) return by_n;
    const double s0 = rho0 * rho0 - floor_term / c;
    if (s0 <= floor_term) return by_n;
    const double t = std::ceil(std::log(s0 / floor_term) / -std::log1p(-c));
    return std::max(by_n, static_cast<std::size_t>(std::min(t, 1e6)));
}

std::string IterationTrace::to_csv() const {
    std::ostringstream os;
    os << "t,rho,time_ms\n";
    os << 0 << ',' << format_vector(std::span<const double>(&rho0, 1)) << ",0\n";
    for (const auto& r : iterations) {
        os << r.t << ',' << format_vector(std::span<const double>(&r.rho, 1)) << ','
           << format_vector(std::span<const double>(&r.time_ms, 1)) << '\n';
    }
    return os.str();
}

HashParams hash_parameters(std::size_t n, double epsilon, double gamma, std::size_t B, double threshold) {
    if (B < 3) throw ConfigError("hashing needs B >= 3");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    const double bb = static_cast<double>(B);
    const double c = threshold > 0.0 ? threshold : (bb - 2.0) / (bb * bb);
    HashParams hp;
    if (gamma >= c) {
        hp.passthrough = true;
        hp.epsilon_prime = epsilon;
        hp.gamma_prime = gamma;
        hp.n_prime = n;
        return hp;
    }
    const auto k = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n) - 1e-9));
    hp.n_prime = B * std::max<std::size_t>(k, 1);
    hp.epsilon_prime = epsilon / (bb * gamma);
    hp.gamma_prime = (bb - 2.0) / (bb * bb);
    return hp;
}

IncompleteMatrix hash_combine(const IncompleteMatrix& m, std::span<const std::size_t> h, std::size_t n_prime) {
    if (h.size() != m.n_examples()) throw std::invalid_argument("hash assignment has wrong length");
    if (n_prime == 0) throw std::invalid_argument("hash target needs at least one row");
    const std::size_t d = m.n_dims();
    IncompleteMatrix out(n_prime, d);
    for (std::size_t i = 0; i < m.n_examples(); ++i) {
        const std::size_t r = h[i];
        if (r >= n_prime) throw std::invalid_argument("hash assignment out of range");
        const auto mask = m.mask_row(i);
        const auto raw = m.raw_row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (mask[j] && !out.present(r, j)) out.set(r, j, raw[j]);
        }
    }
    return out;
}

HashResult hash_preprocess(const IncompleteMatrix& m, double epsilon, double gamma, std::size_t B,
                           std::uint64_t seed, double threshold) {
    const auto hp = hash_parameters(m.n_examples(), epsilon, gamma, B, threshold);
    if (hp.passthrough) return HashResult{m, hp, {}};
    std::vector<std::size_t> h(m.n_examples());
    rng::Stream s(rng::derive(seed, rng::Purpose::hash));
    for (auto& x : h) x = s.below(hp.n_prime);
    IncompleteMatrix out = hash_combine(m, h, hp.n_prime);
    return HashResult{std::move(out), hp, std::move(h)};
}

Matrix stacking_transform(const IncompleteMatrix& m, double gamma) {
    require_gamma_complete(m, gamma);
    const std::size_t n = m.n_examples();
    const std::size_t d = m.n_dims();
    const auto k = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) + 1e-9));
    if (k == 0) throw ConfigError("stacking needs floor(gamma N) >= 1");
    Matrix out(k, d);
    for (std::size_t j = 0; j < d; ++j) {
        std::size_t filled = 0;
        for (std::size_t i = 0; i < n && filled < k; ++i) {
            if (m.present(i, j)) out(filled++, j) = m.value(i, j);
        }
    }
    return out;
}

EstimateResult estimate_mean(const IncompleteMatrix& input, const EstimatorConfig& cfg) {
    cfg.validate();
    require_gamma_complete(input, cfg.gamma);

    EstimateResult res;
    IterationTrace& tr = res.trace;
    double epsilon = cfg.epsilon;
    double gamma = cfg.gamma;
    if (cfg.C0 * epsilon > gamma) tr.warnings.push_back("gamma below C0 * epsilon; guarantees do not apply");

    const IncompleteMatrix* work = &input;
    HashResult hashed{IncompleteMatrix(1, 1), {}, {}};
    if (cfg.hashing.enabled) {
        hashed = hash_preprocess(input, epsilon, gamma, cfg.hashing.B, cfg.seed, cfg.hashing.c_threshold);
        if (!hashed.params.passthrough) {
            tr.hashed = true;
            work = &hashed.matrix;
            epsilon = hashed.params.epsilon_prime;
            gamma = hashed.params.gamma_prime;
            const auto rep = gamma_completeness(build_presence_index(*work), work->n_examples());
            if (!rep.is_gamma_complete(gamma)) tr.warnings.push_back("hashed dataset is not gamma'-complete");
            if (epsilon >= 0.5) throw ConfigError("hashed corruption fraction eps/(B gamma) is at least 1/2");
        }
    }

    const std::size_t n = work->n_examples();
    const std::size_t d = work->n_dims();
    std::vector<double> nu = coordinate_median(*work);

    const FillSpec spec = cfg.dist_class == DistClass::p1 ? FillSpec::gaussian(cfg.eta, cfg.seed) : FillSpec::zero();
    const CompletedMatrix completed(*work, spec);

    tr.params = class_params(cfg, n, d, epsilon, gamma, cfg.delta);
    const ClassParams& cp = tr.params;
    if (cp.epsilon_prime > 0.1) tr.warnings.push_back("corruption fraction above the filter regime");
    if (cp.epsilon_prime >= 0.5) throw ConfigError("effective corruption fraction is at least 1/2");
    bool clamped = false;
    (void)rho_update(0.0, cp, cfg, &clamped);
    if (clamped) tr.warnings.push_back("c7 g* >= 1 clamped to 1 - 1e-6");

    double rho = cfg.C_median * std::sqrt(static_cast<double>(d));
    tr.rho0 = rho;
    const std::size_t cap = cfg.iterations > 0 ? cfg.iterations : iteration_cap(n, rho, cp, cfg);
    tr.iteration_cap = cap;
    const double beta2 = cp.beta * cp.beta;

    RobustMeanParams rp;
    rp.epsilon = cp.epsilon_prime;
    rp.eta = cp.eta;
    rp.delta = cfg.delta / static_cast<double>(cap);
    rp.backend = cfg.backend;
    rp.hard_removal = cfg.hard_removal;

    const std::uint64_t fkey = rng::derive(cfg.seed, rng::Purpose::filter);
    bool stopped_early = false;
    for (std::size_t t = 1; t <= cap; ++t) {
        const auto start = std::chrono::steady_clock::now();
        const AdjustedView view = completed.adjust(nu);
        rp.beta = std::sqrt(cfg.C3 * beta2 + cfg.C4 * rho * rho);
        rp.seed = rng::derive(fkey, t);
        auto out = robust_mean_complete(view, rp);
        nu = std::move(out.nu);
        const double next = rho_update(rho, cp, cfg);
        const auto stop = std::chrono::steady_clock::now();

        IterationRecord rec;
        rec.t = t;
        rec.nu = nu;
        rec.rho = next;
        rec.time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        rec.filter_rounds = out.state.rounds.size();
        rec.removed_mass = out.state.removed_mass;
        tr.iterations.push_back(std::move(rec));

        const bool settled = std::abs(next - rho) < 1e-9 * rho;
        rho = next;
        if (settled) {
            stopped_early = true;
            break;
        }
    }
    tr.hit_cap = !stopped_early;
    tr.nu_star = nu;
    tr.rho_star = rho;
    res.nu = std::move(nu);
    return res;
}

}  // namespace rime
