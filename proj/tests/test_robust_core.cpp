#include <Eigen/Dense>
#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "rime/generation.hpp"
#include "rime/linalg.hpp"
#include "rime/robust_core.hpp"

using namespace rime;
using boost::multiprecision::cpp_rational;

namespace {

Matrix gaussian_rows(std::size_t n, std::size_t d, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, sd);
    Matrix m(n, d);
    for (double& x : m.values()) x = nd(gen);
    return m;
}

// First `k` rows moved to (scale, 0, ..., 0).
Matrix with_far_rows(Matrix m, std::size_t k, double scale) {
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = 0.0;
        m(i, 0) = scale;
    }
    return m;
}

WeightVector random_capped(std::size_t n, std::size_t g, double p, std::mt19937_64& gen) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), gen);
    std::vector<std::size_t> support(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(g));
    std::sort(support.begin(), support.end());
    auto w = WeightVector::uniform(n, support);
    w.cap_p = p;
    std::exponential_distribution<double> ex;
    std::vector<double> r(g);
    double s = 0.0;
    for (auto& x : r) s += (x = ex(gen));
    double mx = 0.0;
    for (auto& x : r) mx = std::max(mx, x /= s);
    // mix with uniform until every weight is at most 1/p
    const double u = 1.0 / static_cast<double>(g);
    const double t = mx > 1.0 / p ? (1.0 / p - u) / (mx - u) : 1.0;
    std::uniform_real_distribution<double> shrink(0.0, 1.0);
    const double tt = t * shrink(gen);
    for (std::size_t k = 0; k < g; ++k) w.weights[support[k]] = tt * r[k] + (1.0 - tt) * u;
    return w;
}

double exact_top_score_gap(const Matrix& m, const std::vector<double>& scores) {
    const std::size_t n = m.rows(), d = m.cols();
    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = m(i, j);
    const Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    const Eigen::MatrixXd s = x.transpose() * x / double(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const Eigen::VectorXd v = es.eigenvectors().col(d - 1);
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = std::pow(x.row(i).dot(v), 2);
        gap = std::max(gap, std::abs(t - scores[i]) / (1.0 + t));
    }
    return gap;
}

std::set<std::size_t> top_rows(const std::vector<double>& s, std::size_t k) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](auto a, auto b) { return s[a] > s[b]; });
    return {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k)};
}

}  // namespace

TEST_CASE("uniform weights lie in the simplex") {
    const auto w = WeightVector::uniform(5, {0, 2, 4});
    CHECK(w.in_simplex());
    CHECK(w.weights[1] == 0.0);
    CHECK(w.sum() == doctest::Approx(1.0));
    auto bad = w;
    bad.weights[1] = 0.1;
    CHECK_FALSE(bad.in_simplex());
    bad = w;
    bad.cap_p = 3.5;
    CHECK_FALSE(bad.in_simplex());
}

TEST_CASE("pair weights examples") {
    WeightVector w;
    w.support = {0, 1, 2};
    w.weights = {1.0, 0.0, 0.0};
    w.cap_p = 1.0;
    const auto t = pair_weights(w);
    CHECK(t.weights == std::vector<double>{0.0, 0.5, 0.5});
    CHECK(t.cap_p == 2.0);
    CHECK(t.in_simplex());

    auto u = WeightVector::uniform(10, {1, 3, 5, 7});
    u.cap_p = 3.0;
    const auto tu = pair_weights(u);
    for (auto i : u.support) CHECK(tu.weights[i] == doctest::Approx(0.25).epsilon(1e-15));

    w.cap_p = 3.0;
    CHECK_THROWS_AS(pair_weights(w), std::invalid_argument);
}

TEST_CASE("pair weights against an exact rational oracle") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto w = random_capped(30, 20, 7.0, gen);
        REQUIRE(w.in_simplex(1e-12));
        const auto t = pair_weights(w);
        CHECK(t.in_simplex(1e-12));
        const auto back = pair_weights(t);
        const cpp_rational g(20), p(7);
        for (auto i : w.support) {
            const cpp_rational wi(w.weights[i]);
            const cpp_rational ti = (1 - p * wi) / (g - p);
            CHECK(p / g * wi + (g - p) / g * ti == 1 / g);
            CHECK(std::abs(t.weights[i] - ti.convert_to<double>()) <= 1e-15);
            CHECK(std::abs(back.weights[i] - w.weights[i]) <= 1e-12 * w.weights[i] + 1e-16);
        }
    }
}

TEST_CASE("naive pruning") {
    const Matrix same(10, 3, 2.5);
    const auto a = naive_prune(DenseRows(same), 0.1);
    CHECK(a.retained.size() == 10);
    CHECK(a.center == std::vector<double>(3, 2.5));

    Matrix far(100, 4, 0.0);
    far(99, 2) = 1e6;
    const auto b = naive_prune(DenseRows(far), 0.05);
    CHECK(b.retained.size() == 99);
    CHECK(std::find(b.retained.begin(), b.retained.end(), 99) == b.retained.end());

    int kept_all = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto g = gaussian_rows(1000, 10, seed);
        kept_all += naive_prune(DenseRows(g), 0.0).retained.size() == 1000;
    }
    CHECK(kept_all == 100);
    int kept_small = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto g = gaussian_rows(1000, 10, seed);
        kept_small += naive_prune(DenseRows(g), 0.01).retained.size() == 1000;
    }
    CHECK(kept_small >= 95);
}

TEST_CASE("scores of isotropic rows are all equal") {
    Matrix m(8, 4, 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
        m(2 * j, j) = 2.0;
        m(2 * j + 1, j) = -2.0;
    }
    const std::vector<double> w(8, 1.0 / 8), c(4, 0.0);
    for (auto backend : {ScoreBackend::exact_spectral, ScoreBackend::sketched_que}) {
        const auto s = outlier_scores(DenseRows(m), w, c, backend, {.eta = 1.0});
        const double mx = *std::max_element(s.begin(), s.end());
        for (double x : s) CHECK(std::abs(x - mx) <= 1e-6 * mx);
    }
}

TEST_CASE("a displaced row gets the largest score") {
    auto m = gaussian_rows(200, 5, 3);
    m(17, 0) += 100.0;
    const std::vector<double> w(200, 1.0 / 200), c(5, 0.0);
    const auto s = outlier_scores(DenseRows(m), w, c, ScoreBackend::exact_spectral, {.eta = 1.0});
    CHECK(std::max_element(s.begin(), s.end()) - s.begin() == 17);
    CHECK(exact_top_score_gap(m, s) <= 1e-5);
}

TEST_CASE("sketched and exact scores pick the same top rows") {
    int agree = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Scenario sc;
        sc.dist = DistributionSpec::p1(std::vector<double>(50, 0.0), 1.0);
        sc.plan = PresencePlan::uniform_random(1.0);
        sc.adversary = AdversaryStrategy::clustered_shift(0.05, {}, 20.0);
        sc.n = 500;
        sc.seed = seed;
        const auto inst = realize(sc);
        Matrix m(500, 50);
        for (std::size_t i = 0; i < 500; ++i)
            for (std::size_t j = 0; j < 50; ++j) m(i, j) = inst.observed.value(i, j);
        const std::vector<double> w(500, 1.0 / 500);
        const auto c = coordinate_median(DenseRows(m));
        const auto ex = outlier_scores(DenseRows(m), w, c, ScoreBackend::exact_spectral, {.eta = 1.0, .seed = seed});
        const auto sk = outlier_scores(DenseRows(m), w, c, ScoreBackend::sketched_que, {.eta = 1.0, .seed = seed});
        agree += top_rows(ex, 25) == top_rows(sk, 25);
    }
    CHECK(agree >= 95);
}

TEST_CASE("constant rows give their value exactly") {
    const std::vector<double> mu0{1.25, -3.5, 7.0};
    Matrix m(40, 3);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 3; ++j) m(i, j) = mu0[j];
    for (double eps : {0.0, 0.05, 0.2}) {
        const auto r = robust_mean_complete(DenseRows(m), {.epsilon = eps, .eta = 0.0, .beta = 1.0});
        CHECK(r.nu == mu0);
    }
}

TEST_CASE("gross outliers are filtered") {
    int ok = 0;
    double worst_mean = 1e9;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = with_far_rows(gaussian_rows(1000, 20, seed), 50, 1e3);
        const auto r = robust_mean_complete(DenseRows(m), {.epsilon = 0.05, .eta = 1.0, .seed = seed});
        ok += norm2(r.nu) <= 0.5;
        const std::vector<double> u(1000, 1.0);
        worst_mean = std::min(worst_mean, norm2(weighted_mean(DenseRows(m), u)));
        CHECK(r.state.removed_mass <= 0.1 + 1e-9);
    }
    CHECK(ok >= 19);
    CHECK(worst_mean == doctest::Approx(50.0).epsilon(0.01));
}

TEST_CASE("clean data with no corruption") {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto m = gaussian_rows(10000, 10, seed);
        for (std::size_t i = 0; i < 10000; ++i) m(i, 3) += 4.0;
        const auto r = robust_mean_complete(DenseRows(m), {.epsilon = 0.0, .eta = 1.0});
        std::vector<double> mu(10, 0.0);
        mu[3] = 4.0;
        ok += distance2(r.nu, mu) <= 2.0 * std::sqrt(10.0 / 10000.0);
    }
    CHECK(ok >= 95);
}

TEST_CASE("weights stay in the simplex after every round") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = gaussian_rows(400, 8, seed);
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 8; ++j) m(i, j) += 5.0 + static_cast<double>(i % 4);
        for (bool hard : {false, true}) {
            const auto r = robust_mean_complete(DenseRows(m), {.epsilon = 0.05, .eta = 1.0, .hard_removal = hard,
                                                               .seed = seed},
                                                true);
            CHECK(r.state.weights.in_simplex(1e-12));
            for (const auto& w : r.state.weight_history) CHECK(w.in_simplex(1e-12));
            CHECK(r.state.removed_mass <= 0.1 + 1e-12);
        }
    }
}

TEST_CASE("top eigenvalue does not increase across rounds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = gaussian_rows(600, 10, seed);
        for (std::size_t i = 0; i < 30; ++i)
            for (std::size_t j = 0; j < 10; ++j) m(i, j) += (j == 0 ? 8.0 : 0.0) + 0.5 * static_cast<double>(i % 3);
        const auto r = robust_mean_complete(DenseRows(m), {.epsilon = 0.05, .eta = 1.0, .seed = seed});
        double prev = INFINITY;
        for (const auto& round : r.state.rounds) {
            if (round.trace_bound) continue;
            CHECK(round.top_eigenvalue <= prev * (1 + 1e-9));
            prev = round.top_eigenvalue;
        }
    }
}

TEST_CASE("translation equivariance") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = with_far_rows(gaussian_rows(300, 6, seed), 15, 200.0);
        std::mt19937_64 gen(seed);
        std::normal_distribution<double> nd(0.0, 10.0);
        std::vector<double> shift(6);
        for (auto& x : shift) x = nd(gen);
        const DenseRows base(m);
        const ShiftedRows moved(base, shift);
        const RobustMeanParams p{.epsilon = 0.05, .eta = 1.0, .seed = seed};
        const auto a = robust_mean_complete(base, p);
        const auto b = robust_mean_complete(moved, p);
        for (std::size_t j = 0; j < 6; ++j) CHECK(b.nu[j] == doctest::Approx(a.nu[j] + shift[j]).epsilon(1e-9));
        CHECK(a.state.rounds.size() == b.state.rounds.size());
    }
}

TEST_CASE("removal falls mostly on corrupted rows") {
    int safe = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Scenario sc;
        sc.dist = DistributionSpec::p1(std::vector<double>(20, 0.0), 1.0);
        sc.plan = PresencePlan::uniform_random(1.0);
        sc.adversary = AdversaryStrategy::far_outliers(0.05, 1e3);
        sc.n = 1000;
        sc.seed = seed;
        const auto inst = realize(sc);
        Matrix m(1000, 20);
        for (std::size_t i = 0; i < 1000; ++i)
            for (std::size_t j = 0; j < 20; ++j) m(i, j) = inst.observed.value(i, j);
        const auto r = robust_mean_complete(DenseRows(m), {.epsilon = 0.05, .eta = 1.0, .seed = seed}, true);
        std::vector<bool> bad(1000, false);
        for (auto i : inst.truth.corrupted_rows) bad[i] = true;
        bool all_rounds = true;
        std::vector<double> prev(1000, 1.0 / 1000);
        for (const auto& w : r.state.weight_history) {
            double good_loss = 0.0, bad_loss = 0.0;
            double prev_sum = 0.0, cur_sum = 0.0;
            for (std::size_t i = 0; i < 1000; ++i) {
                prev_sum += prev[i];
                cur_sum += w.weights[i];
            }
            for (std::size_t i = 0; i < 1000; ++i) {
                const double drop = std::max(0.0, prev[i] / prev_sum - w.weights[i] / cur_sum);
                (bad[i] ? bad_loss : good_loss) += drop;
            }
            all_rounds = all_rounds && good_loss <= bad_loss;
            prev = w.weights;
        }
        safe += all_rounds;
    }
    CHECK(safe >= 95);
}

TEST_CASE("filter bookkeeping") {
    const auto m = gaussian_rows(200, 4, 1);
    CHECK_THROWS_AS(robust_mean_complete(DenseRows(Matrix(0, 4)), {}), std::invalid_argument);
    const auto hi = robust_mean_complete(DenseRows(m), {.epsilon = 0.2, .eta = 1.0});
    CHECK(hi.state.epsilon_above_regime);
    const auto far = with_far_rows(m, 10, 1e3);
    const auto r = robust_mean_complete(DenseRows(far), {.epsilon = 0.05, .eta = 1.0});
    const auto text = r.state.diagnostic_text();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(r.state.rounds.size()));
    CHECK(r.state.iteration == r.state.rounds.size());
}

TEST_CASE("goodness probe") {
    Matrix same(50, 3, 1.5);
    const auto z = goodness_probe(DenseRows(same), std::vector<double>(3, 1.5), 0.05, 0.0, 20, 1);
    CHECK(z.max_mean_deviation == 0.0);
    CHECK(z.max_spectral_deviation == 0.0);

    auto g = gaussian_rows(10000, 10, 4);
    const std::vector<double> mu(10, 0.0);
    const double beta = subgaussian_beta(10000, 10, 0.05, 0.1, 3.0);
    const auto r = goodness_probe(DenseRows(g), mu, 0.05, 1.0, 20, 2);
    CHECK(r.max_mean_deviation <= beta * std::sqrt(0.05));
    CHECK(r.max_spectral_deviation <= beta * beta);

    g(0, 0) = 1e3;
    const auto bad = goodness_probe(DenseRows(g), mu, 0.05, 1.0, 0, 2);
    CHECK(bad.max_spectral_deviation > beta * beta);
}

TEST_CASE("sub-Gaussian beta") {
    const double b = subgaussian_beta(10000, 10, 0.05, 0.1, 3.0);
    CHECK(b == doctest::Approx(3.0 * std::sqrt((10 + std::log(10.0)) / (10000 * 0.05) + 0.05 * std::log(20.0))));
    CHECK(std::isinf(subgaussian_beta(100, 2, 0.0, 0.1)));
}
