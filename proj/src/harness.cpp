#include "rime/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <thread>

#include "rime/completion.hpp"
#include "rime/dataset_io.hpp"
#include "rime/errors.hpp"
#include "rime/estimator.hpp"
#include "rime/generation.hpp"
#include "rime/linalg.hpp"
#include "rime/rng.hpp"

namespace rime {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::median_only: return "median-only";
        case Variant::stacking_filter: return "stacking+filter";
        case Variant::hash_filter: return "hash+filter";
        case Variant::present_entry_mean: return "present-entry-mean";
    }
    return "full";
}

Variant parse_variant(const std::string& name) {
    for (auto v : {Variant::full, Variant::median_only, Variant::stacking_filter, Variant::hash_filter,
                   Variant::present_entry_mean}) {
        if (to_string(v) == name) return v;
    }
    throw ConfigError("unknown variant '" + name + "'");
}

std::size_t ExperimentSpec::cell_count() const noexcept {
    return d.size() * n.size() * gamma.size() * epsilon.size() * classes.size() * strategies.size();
}

ExperimentSpec ExperimentSpec::parse(const KvConfig& cfg) {
    ExperimentSpec s;
    for (auto v : cfg.get_u64_list("d")) s.d.push_back(v);
    for (auto v : cfg.get_u64_list("N")) s.n.push_back(v);
    s.gamma = cfg.get_double_list("gamma");
    s.epsilon = cfg.get_double_list("epsilon");
    s.classes = cfg.get_list("class");
    s.strategies = cfg.get_list("strategy");
    if (s.classes.empty()) s.classes = {"p1:1"};
    if (s.strategies.empty()) s.strategies = {"none"};
    if (s.epsilon.empty()) s.epsilon = {0.0};
    if (s.gamma.empty()) s.gamma = {1.0};
    if (cfg.has("variants")) {
        s.variants.clear();
        for (const auto& v : cfg.get_list("variants")) s.variants.push_back(parse_variant(v));
    }
    s.reps = cfg.get_u64("reps", 1);
    s.seed = cfg.get_u64("seed", 0);
    s.delta = cfg.get_double("delta", 0.1);
    s.scale = cfg.get_double("scale", 1e3);
    s.magnitude = cfg.get_double("magnitude", 0.0);
    s.presence = cfg.get_string("presence", "uniform");
    s.iterations = cfg.get_u64("iterations", 0);
    if (s.d.empty() || s.n.empty()) throw FormatError("experiment spec needs d and N");
    if (s.reps == 0) throw ConfigError("reps must be at least 1");
    for (const auto& st : s.strategies) (void)parse_strategy(st);
    return s;
}

ExperimentSpec ExperimentSpec::load(const std::filesystem::path& path) { return parse(KvConfig::load(path)); }

Cell cell_at(const ExperimentSpec& spec, std::size_t index) {
    Cell c;
    std::size_t r = index;
    const auto take = [&r](std::size_t size) {
        const std::size_t k = r % size;
        r /= size;
        return k;
    };
    c.strategy = spec.strategies[take(spec.strategies.size())];
    c.cls = spec.classes[take(spec.classes.size())];
    c.epsilon = spec.epsilon[take(spec.epsilon.size())];
    c.gamma = spec.gamma[take(spec.gamma.size())];
    c.n = spec.n[take(spec.n.size())];
    c.d = spec.d[take(spec.d.size())];
    return c;
}

namespace {

struct ClassChoice {
    DistributionSpec dist;
    DistClass est_class = DistClass::p1;
    double eta = 1.0;
};

ClassChoice parse_class(const std::string& token, std::vector<double> mean, double epsilon) {
    const auto parts = split(token, ':');
    ClassChoice c;
    if (parts.empty()) throw ConfigError("empty class token");
    if (parts[0] == "p1") {
        c.eta = parts.size() > 1 ? parse_double(parts[1], "eta") : 1.0;
        c.est_class = DistClass::p1;
        c.dist = DistributionSpec::p1(std::move(mean), c.eta);
    } else if (parts[0] == "p2") {
        c.est_class = DistClass::p2;
        c.eta = 0.0;
        const std::string kind = parts.size() > 1 ? parts[1] : "capped";
        if (kind == "capped") {
            c.dist = DistributionSpec::p2(std::move(mean), DistributionSpec::P2Kind::capped_gaussian);
        } else if (kind == "rademacher") {
            c.dist = DistributionSpec::p2(std::move(mean), DistributionSpec::P2Kind::rademacher);
        } else if (kind == "two_point") {
            const double a = parts.size() > 2 ? parse_double(parts[2], "a") : (epsilon > 0.0 ? 1.1 * epsilon : 0.01);
            c.dist = DistributionSpec::p2(std::move(mean), DistributionSpec::P2Kind::two_point, a);
        } else {
            throw ConfigError("unknown P2 kind '" + kind + "'");
        }
    } else {
        throw ConfigError("class must start with p1 or p2");
    }
    return c;
}

double l2_error(std::span<const double> nu, std::span<const double> mu) { return distance2(nu, mu); }

std::vector<double> diff(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
    return out;
}

double potential_residual(const IterationTrace& tr, const EstimatorConfig& cfg) {
    const double c = std::min(cfg.c7 * tr.params.g_star, 1.0 - 1e-6);
    const double a = cfg.C6 * tr.params.beta2_eps / c;
    double prev = tr.rho0;
    double worst = 0.0;
    for (const auto& it : tr.iterations) {
        const double s0 = prev * prev - a;
        const double s1 = it.rho * it.rho - a;
        const double scale = std::max(prev * prev, it.rho * it.rho);
        if (scale > 0.0) worst = std::max(worst, std::abs(s1 - (1.0 - c) * s0) / scale);
        prev = it.rho;
    }
    return worst;
}

std::vector<double> complete_filter_mean(const Matrix& rows, double epsilon, double eta, double delta,
                                         std::uint64_t seed) {
    RobustMeanParams rp;
    rp.epsilon = std::min(epsilon, 0.45);
    rp.eta = eta;
    rp.delta = delta;
    rp.seed = seed;
    return robust_mean_complete(DenseRows(rows), rp).nu;
}

// Naive reduction: hash into ceil(gamma N) rows, fill the rest with the
// coordinate median, then run the complete-data filter.
std::vector<double> hash_filter(const IncompleteMatrix& m, double epsilon, double gamma, double eta, double delta,
                                std::uint64_t seed) {
    const auto n_prime = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(m.n_examples()) - 1e-9)));
    std::vector<std::size_t> h(m.n_examples());
    rng::Stream s(rng::derive(seed, rng::Purpose::hash));
    for (auto& x : h) x = s.below(n_prime);
    const IncompleteMatrix combined = hash_combine(m, h, n_prime);
    const auto med = coordinate_median(combined);
    Matrix dense(n_prime, m.n_dims());
    for (std::size_t i = 0; i < n_prime; ++i) {
        for (std::size_t j = 0; j < m.n_dims(); ++j) {
            dense(i, j) = combined.present(i, j) ? combined.value(i, j) : med[j];
        }
    }
    return complete_filter_mean(dense, epsilon / gamma, eta, delta, seed);
}

}  // namespace

std::vector<ResultRow> run_cell(const ExperimentSpec& spec, std::size_t cell_index, std::size_t rep) {
    const Cell cell = cell_at(spec, cell_index);
    const std::uint64_t seed = rng::derive(rng::derive(spec.seed, rng::Purpose::experiment), cell_index, rep);

    std::vector<ResultRow> rows;
    const auto base_row = [&](Variant v) {
        ResultRow r;
        r.cell = cell;
        r.variant = v;
        r.rep = rep;
        r.seed = seed;
        return r;
    };

    try {
        rng::Stream ms(rng::derive(seed, rng::Purpose::experiment));
        std::vector<double> mu(cell.d);
        for (auto& x : mu) x = ms.normal();
        const ClassChoice cc = parse_class(cell.cls, mu, cell.epsilon);

        Scenario sc;
        sc.dist = cc.dist;
        sc.plan = spec.presence == "uniform" ? PresencePlan::uniform_random(cell.gamma)
                                             : PresencePlan::adversarial_pattern(spec.presence, cell.gamma);
        sc.adversary.kind = parse_strategy(cell.strategy);
        sc.adversary.epsilon = cell.epsilon;
        sc.adversary.scale = spec.scale;
        sc.adversary.magnitude = spec.magnitude;
        sc.n = cell.n;
        sc.seed = seed;
        const Instance inst = realize(sc);
        const auto clean = inst.truth.clean_rows(cell.n);
        const GVector g = GVector::from_presence(inst.observed, clean);

        for (Variant v : spec.variants) {
            ResultRow r = base_row(v);
            const auto start = std::chrono::steady_clock::now();
            try {
                std::vector<double> nu;
                switch (v) {
                    case Variant::full: {
                        EstimatorConfig cfg;
                        cfg.epsilon = cell.epsilon;
                        cfg.gamma = cell.gamma;
                        cfg.delta = spec.delta;
                        cfg.dist_class = cc.est_class;
                        cfg.eta = cc.eta;
                        cfg.iterations = spec.iterations;
                        cfg.seed = seed;
                        auto est = estimate_mean(inst.observed, cfg);
                        nu = std::move(est.nu);
                        r.iters = est.trace.iterations.size();
                        r.hit_cap = est.trace.hit_cap;
                        r.potential_residual = potential_residual(est.trace, cfg);
                        r.rho.push_back(est.trace.rho0);
                        for (const auto& it : est.trace.iterations) r.rho.push_back(it.rho);
                        const auto e = diff(nu, inst.truth.mu);
                        const double l2n = norm2(e);
                        const double l2sq = l2n * l2n;
                        const double gn = g_norm(e, g);
                        r.g_bound_holds = l2sq <= (gn * gn / est.trace.params.g_star) * (1.0 + 1e-12);
                        break;
                    }
                    case Variant::median_only:
                        nu = coordinate_median(inst.observed);
                        break;
                    case Variant::present_entry_mean:
                        nu = present_entry_mean(inst.observed);
                        break;
                    case Variant::stacking_filter:
                        nu = complete_filter_mean(stacking_transform(inst.observed, cell.gamma),
                                                  cell.epsilon / cell.gamma, cc.eta, spec.delta, seed);
                        break;
                    case Variant::hash_filter:
                        nu = hash_filter(inst.observed, cell.epsilon, cell.gamma, cc.eta, spec.delta, seed);
                        break;
                }
                const auto e = diff(nu, inst.truth.mu);
                r.l2_error = l2_error(nu, inst.truth.mu);
                r.g_error = g_norm(e, g);
                if (!std::isfinite(r.l2_error) || !std::isfinite(r.g_error)) {
                    r.status = "error: non-finite estimate";
                }
            } catch (const std::exception& ex) {
                r.status = std::string("error: ") + ex.what();
            }
            r.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            rows.push_back(std::move(r));
        }
    } catch (const std::exception& ex) {
        rows.clear();
        for (Variant v : spec.variants) {
            ResultRow r = base_row(v);
            r.status = std::string("error: ") + ex.what();
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::size_t threads) {
    const std::size_t tasks = spec.cell_count() * spec.reps;
    std::vector<std::vector<ResultRow>> out(tasks);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(tasks, 1));
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) {
            out[t] = run_cell(spec, t / spec.reps, t % spec.reps);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    std::vector<ResultRow> rows;
    for (auto& v : out) {
        for (auto& r : v) rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

std::string num(double v) { return format_vector(std::span<const double>(&v, 1)); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "d,N,gamma,epsilon,class,strategy,variant,rep,seed,l2_error,g_error,iters,time_ms,status\n";
    for (const auto& r : rows) {
        out << r.cell.d << ',' << r.cell.n << ',' << num(r.cell.gamma) << ',' << num(r.cell.epsilon) << ','
            << csv_field(r.cell.cls) << ',' << r.cell.strategy << ',' << to_string(r.variant) << ',' << r.rep + 1
            << ',' << r.seed << ',' << num(r.l2_error) << ',' << num(r.g_error) << ',' << r.iters << ','
            << num(r.time_ms) << ',' << csv_field(r.status) << '\n';
    }
}

void write_summary(std::ostream& out, const std::vector<ResultRow>& rows) {
    std::map<std::string, std::vector<double>> groups;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        const std::string key = std::to_string(r.cell.d) + ' ' + std::to_string(r.cell.n) + ' ' + num(r.cell.gamma) +
                                ' ' + num(r.cell.epsilon) + ' ' + r.cell.cls + ' ' + r.cell.strategy + ' ' +
                                to_string(r.variant);
        auto [it, fresh] = groups.try_emplace(key);
        if (fresh) order.push_back(key);
        it->second.push_back(r.l2_error);
    }
    out << "# d N gamma epsilon class strategy variant median_l2 reps\n";
    for (const auto& key : order) {
        auto v = groups[key];
        const std::size_t reps = v.size();
        out << key << ' ' << num(median_inplace(v)) << ' ' << reps << '\n';
    }
}

HashingFailureReport hashing_failure_demo(std::size_t n, std::size_t d, double gamma, double C, std::uint64_t seed) {
    if (n == 0 || d == 0) throw ConfigError("hashdemo needs n >= 1 and d >= 1");
    if (!(gamma > 0.0 && gamma <= 0.5)) throw ConfigError("hashdemo needs gamma in (0, 1/2]");
    if (!(C > 0.0)) throw ConfigError("hashdemo needs C > 0");
    HashingFailureReport rep;
    rep.n = n;
    rep.d = d;
    rep.gamma = gamma;
    rep.C = C;
    rep.n_prime = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(gamma * static_cast<double>(n) / C)));
    rep.n_prime = std::min(rep.n_prime, n);
    rep.prediction = std::exp(-4.0 * C);
    rep.lower_bound = std::exp(-4.0 * C - 2.0);

    rng::Stream hs(rng::derive(seed, rng::Purpose::hash));
    std::vector<std::size_t> h(n);
    std::vector<std::size_t> bucket(rep.n_prime, 0);
    for (auto& x : h) {
        x = hs.below(rep.n_prime);
        ++bucket[x];
    }
    std::vector<std::uint8_t> present(rep.n_prime * d, 0);
    const std::uint64_t pkey = rng::derive(seed, rng::Purpose::presence);
    for (std::size_t i = 0; i < n; ++i) {
        rng::Stream s(rng::derive(pkey, i));
        std::uint8_t* row = present.data() + h[i] * d;
        for (std::size_t j = 0; j < d; ++j) {
            if (s.bernoulli(2.0 * gamma)) row[j] = 1;
        }
    }
    std::size_t missing = 0;
    for (auto p : present) missing += p ? 0 : 1;
    rep.missing_fraction = static_cast<double>(missing) / static_cast<double>(present.size());
    double expected = 0.0;
    for (auto b : bucket) expected += std::pow(1.0 - 2.0 * gamma, static_cast<double>(b));
    rep.expected_fraction = expected / static_cast<double>(rep.n_prime);
    return rep;
}

SelectivePresenceReport selective_presence_demo(std::size_t n, std::size_t d, double gamma, std::uint64_t seed) {
    std::vector<double> mu(d, 0.0);
    const auto g = generate(DistributionSpec::p1(mu, 1.0), PresencePlan::adversarial_pattern("all", 1.0), n, seed);
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(n) - 1e-9)));
    IncompleteMatrix m(n, d);
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(),
                         [&](std::size_t a, std::size_t b) { return g.full(a, j) > g.full(b, j); });
        for (std::size_t t = 0; t < k; ++t) m.set(order[t], j, g.full(order[t], j));
    }
    SelectivePresenceReport rep;
    EstimatorConfig cfg;
    cfg.gamma = static_cast<double>(k) / static_cast<double>(n);
    cfg.epsilon = 0.0;
    cfg.eta = 1.0;
    cfg.seed = seed;
    rep.estimator_error = l2_error(estimate_mean(m, cfg).nu, mu);
    rep.median_error = l2_error(coordinate_median(m), mu);
    rep.present_mean_error = l2_error(present_entry_mean(m), mu);
    return rep;
}

}  // namespace rime
