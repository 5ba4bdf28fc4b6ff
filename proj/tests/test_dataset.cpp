#include <algorithm>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "figure1.hpp"
#include "rime/dataset.hpp"
#include "rime/dataset_io.hpp"
#include "rime/errors.hpp"

using namespace rime;

namespace {

IncompleteMatrix random_incomplete(std::size_t n, std::size_t d, double p, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution keep(p);
    std::normal_distribution<double> nd(0.0, 1e3);
    IncompleteMatrix m(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (keep(gen)) m.set(i, j, nd(gen));
    return m;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("rime_test_dataset_" + name);
}

}  // namespace

TEST_CASE("presence index of the worked example") {
    const auto idx = build_presence_index(fig1::observed());
    REQUIRE(idx.n_dims() == 4);
    CHECK(idx.gamma_sets[0] == std::vector<std::size_t>{1, 3, 6});
    CHECK(idx.gamma_sets[1] == std::vector<std::size_t>{3, 5, 6});
    CHECK(idx.gamma_sets[2] == std::vector<std::size_t>{0, 1, 5});
    CHECK(idx.gamma_sets[3] == std::vector<std::size_t>{1, 2, 3});
    CHECK(idx.counts == std::vector<std::size_t>{3, 3, 3, 3});
    CHECK(idx.total_present() == fig1::observed().present_count());
}

TEST_CASE("presence index edge cases") {
    const auto full = IncompleteMatrix::from_complete(Matrix(2, 2, 1.5));
    const auto a = build_presence_index(full);
    CHECK(a.gamma_sets[0] == std::vector<std::size_t>{0, 1});
    CHECK(a.gamma_sets[1] == std::vector<std::size_t>{0, 1});

    const IncompleteMatrix empty(3, 2);
    const auto b = build_presence_index(empty);
    CHECK(b.gamma_sets[0].empty());
    CHECK(b.gamma_sets[1].empty());
    CHECK(b.total_present() == 0);
}

TEST_CASE("gamma completeness") {
    const auto fig = build_presence_index(fig1::observed());
    const auto r = gamma_completeness(fig, 7);
    CHECK(r.min_fraction == 3.0 / 7.0);
    CHECK(r.is_gamma_complete(3.0 / 7.0));
    CHECK_FALSE(r.is_gamma_complete(0.43));

    const auto full = IncompleteMatrix::from_complete(Matrix(4, 3, 0.0));
    CHECK(gamma_completeness(build_presence_index(full), 4).min_fraction == 1.0);

    auto one_empty = IncompleteMatrix::from_complete(Matrix(4, 3, 0.0));
    for (std::size_t i = 0; i < 4; ++i) one_empty.conceal(i, 1);
    const auto e = gamma_completeness(build_presence_index(one_empty), 4);
    CHECK(e.min_fraction == 0.0);
    CHECK(e.argmin_coordinate == 1);

    CHECK_THROWS_AS(require_gamma_complete(fig1::observed(), 0.5), NotGammaComplete);
    CHECK_NOTHROW(require_gamma_complete(fig1::observed(), 0.4));
}

TEST_CASE("presence index reconstructs the mask") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = random_incomplete(37, 9, 0.3, seed);
        const auto idx = build_presence_index(m);
        const auto mask = idx.reconstruct_mask();
        for (std::size_t i = 0; i < 37; ++i)
            for (std::size_t j = 0; j < 9; ++j) CHECK((mask[i * 9 + j] != 0) == m.present(i, j));
        CHECK(idx.total_present() == m.present_count());
    }
}

TEST_CASE("gamma completeness ignores row order") {
    const auto m = random_incomplete(50, 6, 0.4, 3);
    std::vector<std::size_t> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
    IncompleteMatrix s(50, 6);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            if (m.present(perm[i], j)) s.set(i, j, m.value(perm[i], j));
    const auto a = gamma_completeness(build_presence_index(m), 50);
    const auto b = gamma_completeness(build_presence_index(s), 50);
    CHECK(a.min_fraction == b.min_fraction);
    CHECK(a.per_coordinate == b.per_coordinate);
}

TEST_CASE("csv parsing") {
    std::istringstream in("# dims=4\n0.9,*,2.8,3.9\nNA,1,2,3\n");
    const auto m = read_csv(in);
    REQUIRE(m.n_examples() == 2);
    CHECK(m.present(0, 0));
    CHECK_FALSE(m.present(0, 1));
    CHECK(m.present(0, 2));
    CHECK(m.present(0, 3));
    CHECK(m.value(0, 0) == 0.9);
    CHECK_FALSE(m.present(1, 0));

    std::istringstream ragged("# dims=4\n1,2,3\n");
    try {
        read_csv(ragged);
        FAIL("expected an error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("ragged row") != std::string::npos);
    }
    std::istringstream bad("# dims=2\n1,abc\n");
    CHECK_THROWS_AS(read_csv(bad), FormatError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), FormatError);
}

TEST_CASE("csv writes the missing token") {
    std::ostringstream out;
    write_csv(out, fig1::observed());
    const auto s = out.str();
    CHECK(s.rfind("# dims=4\n", 0) == 0);
    CHECK(s.find("*,*,*,*") != std::string::npos);
}

TEST_CASE("round trips") {
    const auto fig = fig1::observed();
    for (auto fmt : {MatrixFormat::csv, MatrixFormat::binary}) {
        const auto path = temp_file(fmt == MatrixFormat::csv ? "fig.csv" : "fig.bin");
        store_matrix(fig, path, fmt);
        CHECK(detect_format(path) == fmt);
        CHECK(load_matrix(path) == fig);
        std::filesystem::remove(path);
    }
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = random_incomplete(29, 11, 0.5, seed);
        std::stringstream bin;
        write_binary(bin, m);
        const auto b = read_binary(bin);
        REQUIRE(b == m);
        for (std::size_t i = 0; i < 29; ++i)
            for (std::size_t j = 0; j < 11; ++j)
                if (m.present(i, j)) {
                    const double x = m.value(i, j), y = b.value(i, j);
                    CHECK(std::memcmp(&x, &y, sizeof x) == 0);
                }
        std::stringstream csv;
        write_csv(csv, m);
        CHECK(read_csv(csv) == m);
    }
}

TEST_CASE("binary format layout") {
    IncompleteMatrix m(3, 1);
    m.set(2, 0, 1.0);
    std::ostringstream out;
    write_binary(out, m);
    const auto s = out.str();
    REQUIRE(s.size() == 5 + 16 + 1 + 8);
    CHECK(s.substr(0, 5) == "RIMM1");
    CHECK(static_cast<unsigned char>(s[21]) == 0x04);

    std::istringstream bad(std::string("XXXXX"));
    CHECK_THROWS_AS(read_binary(bad), FormatError);
}

TEST_CASE("missing entries carry the sentinel") {
    const auto fig = fig1::observed();
    CHECK(is_missing_sentinel(fig.raw_row(4)[0]));
    CHECK_FALSE(is_missing_sentinel(fig.raw_row(1)[0]));
}
