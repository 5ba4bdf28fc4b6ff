#pragma once

// Synthetic datasets following the four-step corruption procedure:
// choose present sets, draw clean rows, let an adversary rewrite at most
// floor(eps N) rows, then conceal the missing entries.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rime/dataset.hpp"
#include "rime/kv_config.hpp"

namespace rime {

struct DistributionSpec {
    enum class Class { p1, p2 };
    enum class P2Kind { capped_gaussian, rademacher, two_point };

    Class cls = Class::p1;
    // P1: N(mu, eta^2 I).
    double eta = 1.0;
    P2Kind kind = P2Kind::capped_gaussian;
    // capped_gaussian: N(0,1) clipped to [-cap, cap].
    double cap = 3.0;
    // two_point: mu - 0.1 sqrt(a) + B / sqrt(a), B ~ Bernoulli(0.1 a). Mean mu,
    // variance 0.1 (1 - 0.1 a).
    double a = 0.01;
    std::vector<double> mean;

    static DistributionSpec p1(std::vector<double> mean, double eta);
    static DistributionSpec p2(std::vector<double> mean, P2Kind kind, double param = 0.0);

    std::size_t dims() const noexcept { return mean.size(); }
    // Throws ConfigError.
    void validate() const;
};

struct PresencePlan {
    enum class Kind { uniform_random, pattern, explicit_mask };

    Kind kind = Kind::uniform_random;
    double gamma = 1.0;
    // pattern: "all", "banded" or "block".
    std::string pattern;
    // explicit_mask: row-major, explicit_rows x explicit_dims.
    std::vector<std::uint8_t> mask;
    std::size_t explicit_rows = 0;
    std::size_t explicit_dims = 0;

    // Exactly ceil(gamma N) uniformly chosen rows per column.
    static PresencePlan uniform_random(double gamma);
    // Deterministic layouts with ceil(gamma N) rows per column:
    //   banded: column j covers the cyclic row window starting at j * floor(N/d);
    //   block:  column j covers row block (j mod m), m = floor(N / ceil(gamma N)).
    static PresencePlan adversarial_pattern(std::string name, double gamma);
    static PresencePlan explicit_plan(std::size_t n, std::size_t d, std::vector<std::uint8_t> mask);

    // Row-major n x d presence mask. Throws std::invalid_argument when an
    // explicit plan does not match (n, d).
    std::vector<std::uint8_t> realize(std::size_t n, std::size_t d, std::uint64_t seed) const;
};

struct AdversaryStrategy {
    enum class Kind { none, far_outliers, clustered_shift, coordinate_median_attack, presence_rewrite_then_shift };

    Kind kind = Kind::none;
    double epsilon = 0.0;
    // far_outliers: mu + scale * s / sqrt(d) for a common random sign vector s.
    double scale = 1e3;
    // clustered_shift / presence_rewrite_then_shift: row + magnitude * u.
    // Empty direction picks a random unit vector; magnitude 0 picks
    // sqrt(gamma / eps) from the presence plan.
    std::vector<double> direction;
    double magnitude = 0.0;
    // coordinate_median_attack: mu_j + 2 C sign_j.
    double median_c = 3.0;

    static AdversaryStrategy none();
    static AdversaryStrategy far_outliers(double epsilon, double scale);
    static AdversaryStrategy clustered_shift(double epsilon, std::vector<double> direction, double magnitude);
    static AdversaryStrategy coordinate_median_attack(double epsilon, double c = 3.0);
    static AdversaryStrategy presence_rewrite_then_shift(double epsilon, double magnitude);

    std::size_t budget(std::size_t n) const noexcept;
};

std::string to_string(AdversaryStrategy::Kind kind);
AdversaryStrategy::Kind parse_strategy(const std::string& name);

struct GroundTruth {
    std::vector<double> mu;
    // Sorted, 0-based.
    std::vector<std::size_t> corrupted_rows;
    PresencePlan presence_plan;
    // Realized step-1 mask (before any adversarial rewrite).
    std::vector<std::uint8_t> presence;
    std::uint64_t seed = 0;

    // Rows not in corrupted_rows.
    std::vector<std::size_t> clean_rows(std::size_t n) const;
};

struct Generated {
    Matrix full;
    GroundTruth truth;
};

// Steps 1-2. Deterministic given seed; rows use independent substreams.
Generated generate(const DistributionSpec& spec, const PresencePlan& plan, std::size_t n, std::uint64_t seed);

// Steps 3-4. Records corrupted rows in gt. At most adv.budget(N) rows change.
IncompleteMatrix corrupt_and_conceal(const Matrix& full, GroundTruth& gt, const AdversaryStrategy& adv,
                                     std::uint64_t seed);

// Scenario files: flat key=value text.
//   class = p1 | p2              eta = 1          p2_kind = capped|rademacher|two_point
//   p2_param = <cap or a>        mu = constant:<v> | file:<path> | <v1,v2,...>
//   n, d, gamma, epsilon         presence = uniform | banded | block | all
//   strategy = none | far-outliers | clustered-shift | coordinate-median-attack
//              | presence-rewrite-then-shift
//   scale, magnitude, median_c   seed
struct Scenario {
    DistributionSpec dist;
    PresencePlan plan;
    AdversaryStrategy adversary;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

Scenario parse_scenario(const KvConfig& cfg, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct Instance {
    Matrix clean;
    IncompleteMatrix observed;
    GroundTruth truth;
};

Instance realize(const Scenario& s);

}  // namespace rime
