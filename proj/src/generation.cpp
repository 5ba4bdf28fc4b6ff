#include "rime/generation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "rime/dataset_io.hpp"
#include "rime/errors.hpp"
#include "rime/rng.hpp"

namespace rime {

DistributionSpec DistributionSpec::p1(std::vector<double> mean, double eta) {
    DistributionSpec s;
    s.cls = Class::p1;
    s.eta = eta;
    s.mean = std::move(mean);
    return s;
}

DistributionSpec DistributionSpec::p2(std::vector<double> mean, P2Kind kind, double param) {
    DistributionSpec s;
    s.cls = Class::p2;
    s.eta = 0.0;
    s.kind = kind;
    s.mean = std::move(mean);
    if (kind == P2Kind::capped_gaussian && param > 0.0) s.cap = param;
    if (kind == P2Kind::two_point && param > 0.0) s.a = param;
    return s;
}

void DistributionSpec::validate() const {
    if (mean.empty()) throw ConfigError("distribution needs d >= 1");
    for (double m : mean) {
        if (!std::isfinite(m)) throw ConfigError("mean must be finite");
    }
    if (cls == Class::p1 && !(eta >= 0.0 && eta <= 1.0)) throw ConfigError("P1 needs eta in [0, 1]");
    if (cls == Class::p2) {
        if (kind == P2Kind::capped_gaussian && !(cap > 0.0)) throw ConfigError("cap must be positive");
        if (kind == P2Kind::two_point && !(a > 0.0 && a <= 1.0)) throw ConfigError("two-point a must lie in (0, 1]");
    }
}

PresencePlan PresencePlan::uniform_random(double gamma) {
    PresencePlan p;
    p.kind = Kind::uniform_random;
    p.gamma = gamma;
    return p;
}

PresencePlan PresencePlan::adversarial_pattern(std::string name, double gamma) {
    if (name != "all" && name != "banded" && name != "block") {
        throw ConfigError("unknown presence pattern '" + name + "'");
    }
    PresencePlan p;
    p.kind = Kind::pattern;
    p.pattern = std::move(name);
    p.gamma = p.pattern == "all" ? 1.0 : gamma;
    return p;
}

PresencePlan PresencePlan::explicit_plan(std::size_t n, std::size_t d, std::vector<std::uint8_t> mask) {
    if (mask.size() != n * d) throw std::invalid_argument("explicit presence mask has wrong size");
    PresencePlan p;
    p.kind = Kind::explicit_mask;
    p.explicit_rows = n;
    p.explicit_dims = d;
    p.mask = std::move(mask);
    std::size_t min_count = n;
    for (std::size_t j = 0; j < d; ++j) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < n; ++i) c += p.mask[i * d + j] ? 1 : 0;
        min_count = std::min(min_count, c);
    }
    p.gamma = static_cast<double>(min_count) / static_cast<double>(n);
    return p;
}

namespace {

std::size_t rows_per_column(double gamma, std::size_t n) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    const double k = std::ceil(gamma * static_cast<double>(n) - 1e-9);
    return std::min<std::size_t>(n, static_cast<std::size_t>(std::max(k, 0.0)));
}

}  // namespace

std::vector<std::uint8_t> PresencePlan::realize(std::size_t n, std::size_t d, std::uint64_t seed) const {
    if (kind == Kind::explicit_mask) {
        if (n != explicit_rows || d != explicit_dims) {
            throw std::invalid_argument("explicit presence plan covers " + std::to_string(explicit_rows) + "x" +
                                        std::to_string(explicit_dims) + " rows, requested " +
                                        std::to_string(n) + "x" + std::to_string(d));
        }
        return mask;
    }
    std::vector<std::uint8_t> out(n * d, 0);
    if (kind == Kind::pattern && pattern == "all") {
        std::fill(out.begin(), out.end(), std::uint8_t{1});
        return out;
    }
    const std::size_t k = rows_per_column(gamma, n);
    if (kind == Kind::uniform_random) {
        const std::uint64_t key = rng::derive(seed, rng::Purpose::presence);
        std::vector<std::size_t> perm(n);
        for (std::size_t j = 0; j < d; ++j) {
            rng::Stream s(rng::derive(key, j));
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            for (std::size_t t = 0; t < k; ++t) {
                std::swap(perm[t], perm[t + s.below(n - t)]);
                out[perm[t] * d + j] = 1;
            }
        }
        return out;
    }
    if (pattern == "banded") {
        const std::size_t stride = std::max<std::size_t>(1, n / d);
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t start = (j * stride) % n;
            for (std::size_t t = 0; t < k; ++t) out[((start + t) % n) * d + j] = 1;
        }
    } else {
        const std::size_t blocks = k == 0 ? 1 : std::max<std::size_t>(1, n / k);
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t start = (j % blocks) * k;
            for (std::size_t t = 0; t < k; ++t) out[(start + t) * d + j] = 1;
        }
    }
    return out;
}

AdversaryStrategy AdversaryStrategy::none() { return {}; }

AdversaryStrategy AdversaryStrategy::far_outliers(double epsilon, double scale) {
    AdversaryStrategy a;
    a.kind = Kind::far_outliers;
    a.epsilon = epsilon;
    a.scale = scale;
    return a;
}

AdversaryStrategy AdversaryStrategy::clustered_shift(double epsilon, std::vector<double> direction, double magnitude) {
    AdversaryStrategy a;
    a.kind = Kind::clustered_shift;
    a.epsilon = epsilon;
    a.direction = std::move(direction);
    a.magnitude = magnitude;
    return a;
}

AdversaryStrategy AdversaryStrategy::coordinate_median_attack(double epsilon, double c) {
    AdversaryStrategy a;
    a.kind = Kind::coordinate_median_attack;
    a.epsilon = epsilon;
    a.median_c = c;
    return a;
}

AdversaryStrategy AdversaryStrategy::presence_rewrite_then_shift(double epsilon, double magnitude) {
    AdversaryStrategy a;
    a.kind = Kind::presence_rewrite_then_shift;
    a.epsilon = epsilon;
    a.magnitude = magnitude;
    return a;
}

std::size_t AdversaryStrategy::budget(std::size_t n) const noexcept {
    if (kind == Kind::none || !(epsilon > 0.0)) return 0;
    const double b = std::floor(epsilon * static_cast<double>(n) + 1e-9);
    return std::min<std::size_t>(n, static_cast<std::size_t>(b));
}

std::string to_string(AdversaryStrategy::Kind kind) {
    switch (kind) {
        case AdversaryStrategy::Kind::none: return "none";
        case AdversaryStrategy::Kind::far_outliers: return "far-outliers";
        case AdversaryStrategy::Kind::clustered_shift: return "clustered-shift";
        case AdversaryStrategy::Kind::coordinate_median_attack: return "coordinate-median-attack";
        case AdversaryStrategy::Kind::presence_rewrite_then_shift: return "presence-rewrite-then-shift";
    }
    return "none";
}

AdversaryStrategy::Kind parse_strategy(const std::string& name) {
    for (auto k : {AdversaryStrategy::Kind::none, AdversaryStrategy::Kind::far_outliers,
                   AdversaryStrategy::Kind::clustered_shift, AdversaryStrategy::Kind::coordinate_median_attack,
                   AdversaryStrategy::Kind::presence_rewrite_then_shift}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown adversary strategy '" + name + "'");
}

std::vector<std::size_t> GroundTruth::clean_rows(std::size_t n) const {
    std::vector<std::size_t> out;
    out.reserve(n);
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (c < corrupted_rows.size() && corrupted_rows[c] == i) {
            ++c;
            continue;
        }
        out.push_back(i);
    }
    return out;
}

Generated generate(const DistributionSpec& spec, const PresencePlan& plan, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n == 0) throw std::invalid_argument("generate needs n >= 1");
    const std::size_t d = spec.dims();
    Generated g;
    g.truth.presence = plan.realize(n, d, seed);
    g.truth.presence_plan = plan;
    g.truth.mu = spec.mean;
    g.truth.seed = seed;
    g.full = Matrix(n, d);

    const std::uint64_t key = rng::derive(seed, rng::Purpose::sample);
    const double sqrt_a = std::sqrt(spec.a);
    for (std::size_t i = 0; i < n; ++i) {
        rng::Stream s(rng::derive(key, i));
        auto row = g.full.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double z = 0.0;
            if (spec.cls == DistributionSpec::Class::p1) {
                z = spec.eta == 0.0 ? 0.0 : spec.eta * s.normal();
            } else {
                switch (spec.kind) {
                    case DistributionSpec::P2Kind::capped_gaussian:
                        z = std::clamp(s.normal(), -spec.cap, spec.cap);
                        break;
                    case DistributionSpec::P2Kind::rademacher:
                        z = (s() >> 63) ? 1.0 : -1.0;
                        break;
                    case DistributionSpec::P2Kind::two_point:
                        z = (s.bernoulli(0.1 * spec.a) ? 1.0 / sqrt_a : 0.0) - 0.1 * sqrt_a;
                        break;
                }
            }
            row[j] = spec.mean[j] + z;
        }
    }
    return g;
}

namespace {

double average_presence(const std::vector<std::uint8_t>& mask, std::size_t n, std::size_t d) {
    std::size_t c = 0;
    for (auto b : mask) c += b ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(n * d);
}

std::vector<double> unit_direction(const AdversaryStrategy& adv, std::size_t d, rng::Stream& s) {
    std::vector<double> u = adv.direction;
    if (u.empty()) {
        u.resize(d);
        for (auto& x : u) x = s.normal();
    }
    if (u.size() != d) throw ConfigError("adversary direction has wrong length");
    double nrm = 0.0;
    for (double x : u) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) throw ConfigError("adversary direction must be nonzero");
    for (auto& x : u) x /= nrm;
    return u;
}

}  // namespace

IncompleteMatrix corrupt_and_conceal(const Matrix& full, GroundTruth& gt, const AdversaryStrategy& adv,
                                     std::uint64_t seed) {
    const std::size_t n = full.rows();
    const std::size_t d = full.cols();
    if (gt.presence.size() != n * d) throw std::invalid_argument("ground truth presence does not match the matrix");
    if (gt.mu.size() != d) throw std::invalid_argument("ground truth mean does not match the matrix");

    Matrix values = full;
    std::vector<std::uint8_t> mask = gt.presence;
    gt.corrupted_rows.clear();

    const std::size_t budget = adv.budget(n);
    if (budget > 0) {
        rng::Stream s(rng::derive(seed, rng::Purpose::adversary));
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t t = 0; t < budget; ++t) std::swap(perm[t], perm[t + s.below(n - t)]);
        std::vector<std::size_t> chosen(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(budget));
        std::sort(chosen.begin(), chosen.end());

        std::vector<double> signs(d);
        for (auto& x : signs) x = (s() >> 63) ? 1.0 : -1.0;
        double magnitude = adv.magnitude;
        if (magnitude == 0.0) {
            const double gamma = std::max(average_presence(gt.presence, n, d), 1e-12);
            magnitude = std::sqrt(gamma / adv.epsilon);
        }
        std::vector<double> u;
        if (adv.kind == AdversaryStrategy::Kind::clustered_shift ||
            adv.kind == AdversaryStrategy::Kind::presence_rewrite_then_shift) {
            u = unit_direction(adv, d, s);
        }
        const double per_coord = adv.scale / std::sqrt(static_cast<double>(d));

        for (auto i : chosen) {
            auto row = values.row(i);
            switch (adv.kind) {
                case AdversaryStrategy::Kind::none:
                    break;
                case AdversaryStrategy::Kind::far_outliers:
                    for (std::size_t j = 0; j < d; ++j) row[j] = gt.mu[j] + per_coord * signs[j];
                    break;
                case AdversaryStrategy::Kind::clustered_shift:
                    for (std::size_t j = 0; j < d; ++j) row[j] += magnitude * u[j];
                    break;
                case AdversaryStrategy::Kind::coordinate_median_attack:
                    for (std::size_t j = 0; j < d; ++j) row[j] = gt.mu[j] + 2.0 * adv.median_c * signs[j];
                    break;
                case AdversaryStrategy::Kind::presence_rewrite_then_shift:
                    for (std::size_t j = 0; j < d; ++j) {
                        mask[i * d + j] = 1;
                        row[j] += magnitude * u[j];
                    }
                    break;
            }
        }
        gt.corrupted_rows = std::move(chosen);
    }

    IncompleteMatrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (mask[i * d + j]) out.set(i, j, values(i, j));
        }
    }
    return out;
}

namespace {

std::vector<double> parse_mean(const std::string& src, std::size_t d, const std::filesystem::path& base_dir) {
    if (src.rfind("constant:", 0) == 0) {
        return std::vector<double>(d, parse_double(src.substr(9), "mu"));
    }
    if (src.rfind("file:", 0) == 0) {
        std::filesystem::path p = src.substr(5);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw FormatError("cannot open mean file " + p.string());
        std::vector<double> out;
        std::string tok;
        while (in >> tok) {
            for (const auto& part : split(tok, ',')) {
                if (!trim(part).empty()) out.push_back(parse_double(trim(part), "mu"));
            }
        }
        if (out.size() != d) throw FormatError("mean file has " + std::to_string(out.size()) + " values, d = " + std::to_string(d));
        return out;
    }
    std::vector<double> out;
    for (const auto& part : split(src, ',')) out.push_back(parse_double(trim(part), "mu"));
    if (out.size() == 1) return std::vector<double>(d, out[0]);
    if (out.size() != d) throw FormatError("mu has " + std::to_string(out.size()) + " values, d = " + std::to_string(d));
    return out;
}

}  // namespace

Scenario parse_scenario(const KvConfig& cfg, const std::filesystem::path& base_dir) {
    Scenario s;
    s.n = cfg.get_u64("n");
    const std::size_t d = cfg.get_u64("d");
    if (s.n == 0 || d == 0) throw ConfigError("scenario needs n >= 1 and d >= 1");
    s.seed = cfg.get_u64("seed", 0);
    const auto mean = parse_mean(cfg.get_string("mu", "constant:0"), d, base_dir);

    const std::string cls = cfg.get_string("class", "p1");
    if (cls == "p1") {
        s.dist = DistributionSpec::p1(mean, cfg.get_double("eta", 1.0));
    } else if (cls == "p2") {
        const std::string kind = cfg.get_string("p2_kind", "capped");
        DistributionSpec::P2Kind k;
        if (kind == "capped") k = DistributionSpec::P2Kind::capped_gaussian;
        else if (kind == "rademacher") k = DistributionSpec::P2Kind::rademacher;
        else if (kind == "two_point") k = DistributionSpec::P2Kind::two_point;
        else throw ConfigError("unknown p2_kind '" + kind + "'");
        s.dist = DistributionSpec::p2(mean, k, cfg.get_double("p2_param", 0.0));
    } else {
        throw ConfigError("class must be p1 or p2");
    }
    s.dist.validate();

    const double gamma = cfg.get_double("gamma", 1.0);
    const std::string presence = cfg.get_string("presence", "uniform");
    s.plan = presence == "uniform" ? PresencePlan::uniform_random(gamma)
                                   : PresencePlan::adversarial_pattern(presence, gamma);

    const double eps = cfg.get_double("epsilon", 0.0);
    const auto kind = parse_strategy(cfg.get_string("strategy", "none"));
    s.adversary.kind = kind;
    s.adversary.epsilon = eps;
    s.adversary.scale = cfg.get_double("scale", 1e3);
    s.adversary.magnitude = cfg.get_double("magnitude", 0.0);
    s.adversary.median_c = cfg.get_double("median_c", 3.0);
    if (!(eps >= 0.0 && eps < 0.5)) throw ConfigError("epsilon must lie in [0, 1/2)");
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(KvConfig::load(path), path.parent_path());
}

Instance realize(const Scenario& s) {
    auto g = generate(s.dist, s.plan, s.n, s.seed);
    Instance inst{std::move(g.full), IncompleteMatrix(1, 1), std::move(g.truth)};
    inst.observed = corrupt_and_conceal(inst.clean, inst.truth, s.adversary, s.seed);
    return inst;
}

}  // namespace rime
