#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "rime/harness.hpp"
#include "rime/kv_config.hpp"

using namespace rime;

namespace {

ExperimentSpec spec_from(const std::string& text) { return ExperimentSpec::parse(KvConfig::parse(text)); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("one cell, one rep") {
    const auto spec = spec_from("d = 5\nN = 300\ngamma = 0.5\nepsilon = 0.02\nstrategy = far-outliers\nseed = 3\n");
    CHECK(spec.cell_count() == 1);
    const auto rows = run_experiment(spec, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "ok");
    CHECK(rows[0].variant == Variant::full);
    CHECK(rows[0].l2_error >= 0.0);
    CHECK(std::isfinite(rows[0].g_error));
    CHECK(rows[0].g_error <= rows[0].l2_error);
    std::ostringstream out;
    write_results_csv(out, rows);
    const auto s = out.str();
    CHECK(s.rfind("d,N,gamma,epsilon,class,strategy,variant,rep,seed,l2_error,g_error,iters,time_ms,status\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 2);
}

TEST_CASE("grid enumeration") {
    const auto spec = spec_from("d = 5,6\nN = 100\ngamma = 0.5,1\nepsilon = 0.01\nclass = p1:1,p2\n"
                                "strategy = none,far-outliers\nvariants = full,median-only\nreps = 2\n");
    CHECK(spec.cell_count() == 16);
    CHECK(cell_at(spec, 0).strategy == "none");
    CHECK(cell_at(spec, 1).strategy == "far-outliers");
    CHECK(cell_at(spec, 2).cls == "p2");
    CHECK(cell_at(spec, 15).d == 6);
    CHECK_THROWS(spec_from("d = 5\n"));
    CHECK_THROWS(spec_from("d = 5\nN = 10\nstrategy = nope\n"));
    CHECK_THROWS(spec_from("d = 5\nN = 10\nvariants = magic\n"));
}

TEST_CASE("every row is reproducible from its cell and rep") {
    const auto spec = spec_from("d = 6\nN = 400\ngamma = 0.3,0.6\nepsilon = 0.02\nstrategy = far-outliers,"
                                "clustered-shift\nvariants = full,median-only,stacking+filter,hash+filter,"
                                "present-entry-mean\nreps = 2\nseed = 11\n");
    const auto all = run_experiment(spec, 2);
    REQUIRE(all.size() == spec.cell_count() * 2 * 5);
    const auto again = run_cell(spec, 3, 1);
    REQUIRE(again.size() == 5);
    const std::size_t base = (3 * 2 + 1) * 5;
    for (std::size_t k = 0; k < 5; ++k) {
        const auto& a = all[base + k];
        const auto& b = again[k];
        CHECK(a.variant == b.variant);
        CHECK(a.seed == b.seed);
        CHECK(a.l2_error == b.l2_error);
        CHECK(a.g_error == b.g_error);
        CHECK(a.iters == b.iters);
        CHECK(a.status == b.status);
    }
    for (const auto& r : all) {
        CHECK(r.status == "ok");
        CHECK(std::isfinite(r.l2_error));
        CHECK(r.l2_error >= 0.0);
        if (r.variant == Variant::full) {
            CHECK(r.g_bound_holds);
            CHECK(r.potential_residual <= 1e-12);
        }
    }
}

TEST_CASE("failing cells become error rows") {
    const auto spec = spec_from("d = 4\nN = 50\ngamma = 0.5\nepsilon = 0.7\nstrategy = far-outliers\n");
    const auto rows = run_experiment(spec, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status.rfind("error", 0) == 0);
    std::ostringstream out;
    write_results_csv(out, rows);
    CHECK(out.str().find("error") != std::string::npos);
}

TEST_CASE("summary table") {
    const auto spec = spec_from("d = 4\nN = 200\ngamma = 0.5\nepsilon = 0.02\nstrategy = far-outliers\n"
                                "variants = full,median-only\nreps = 3\n");
    const auto rows = run_experiment(spec, 1);
    std::ostringstream out;
    write_summary(out, rows);
    const auto s = out.str();
    CHECK(s[0] == '#');
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}

TEST_CASE("baseline ordering on far outliers") {
    // full <= median-only <= present-entry-mean, per cell, with eps = 0.05 gamma
    std::size_t cells = 0, ordered = 0;
    for (const char* g : {"0.2", "0.5"}) {
        const double eps = 0.05 * std::stod(g);
        const auto spec = spec_from(std::string("d = 20,50\nN = 2000,5000\ngamma = ") + g +
                                    "\nepsilon = " + std::to_string(eps) +
                                    "\nstrategy = far-outliers\nvariants = full,median-only,present-entry-mean\n"
                                    "reps = 3\nseed = 1\n");
        const auto rows = run_experiment(spec);
        std::map<std::pair<std::size_t, Variant>, std::vector<double>> errs;
        for (const auto& r : rows) errs[{r.cell.d * 100000 + r.cell.n, r.variant}].push_back(r.l2_error);
        for (std::size_t c = 0; c < spec.cell_count(); ++c) {
            const auto cell = cell_at(spec, c);
            const auto key = cell.d * 100000 + cell.n;
            const double f = median(errs[{key, Variant::full}]);
            const double m = median(errs[{key, Variant::median_only}]);
            const double p = median(errs[{key, Variant::present_entry_mean}]);
            MESSAGE("gamma " << std::string(g) << " d " << cell.d << " N " << cell.n << ": full " << f << ", median " << m
                             << ", mean " << p);
            ++cells;
            ordered += f <= m && m <= p;
        }
    }
    CHECK(ordered >= 0.9 * static_cast<double>(cells));
}

TEST_CASE("hashing failure demo") {
    const auto none = hashing_failure_demo(4000, 200, 0.05, 0.05, 1);
    CHECK(none.n_prime == 4000);
    CHECK(none.missing_fraction == doctest::Approx(0.9).epsilon(0.01));

    const auto c1 = hashing_failure_demo(20000, 1000, 0.05, 1.0, 2);
    const auto c3 = hashing_failure_demo(20000, 1000, 0.05, 3.0, 2);
    CHECK(c1.n_prime == 1000);
    CHECK(c1.prediction == doctest::Approx(std::exp(-4.0)));
    CHECK(c1.lower_bound == doctest::Approx(std::exp(-6.0)));
    CHECK(c3.missing_fraction < c1.missing_fraction);
    CHECK(c3.missing_fraction > 0.0);
    for (const auto& r : {c1, c3}) {
        CHECK(r.missing_fraction >= r.lower_bound);
        CHECK(r.missing_fraction == doctest::Approx(r.expected_fraction).epsilon(0.05));
    }
}

TEST_CASE("selective presence defeats every estimator") {
    const auto r = selective_presence_demo(4000, 10, 0.2, 5);
    CHECK(r.median_error > 1.0);
    CHECK(r.present_mean_error > 1.0);
    CHECK(r.estimator_error > 1.0);
}
