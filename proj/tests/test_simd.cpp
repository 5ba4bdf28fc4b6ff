#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "rime/simd.hpp"

using rime::simd::KernelTable;

namespace {

std::vector<const KernelTable*> vector_tables() {
    std::vector<const KernelTable*> out;
    if (auto* t = rime::simd::avx2_kernels()) out.push_back(t);
    if (auto* t = rime::simd::neon_kernels()) out.push_back(t);
    return out;
}

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n) {
    std::normal_distribution<double> nd(0.0, 3.0);
    std::vector<double> v(n);
    for (auto& x : v) x = nd(gen);
    return v;
}

void close(double a, double b, double scale) { CHECK(std::abs(a - b) <= 1e-12 * (scale + 1.0)); }

}  // namespace

TEST_CASE("scalar kernels on a hand-sized input") {
    const auto& k = rime::simd::scalar_kernels();
    const double a[] = {1, 2, 3};
    const double b[] = {4, 5, 6};
    CHECK(k.dot(a, b, 3) == 32.0);
    CHECK(k.centered_dot(b, a, a, 3) == 3.0 * 6.0);
    CHECK(k.squared_distance(a, b, 3) == 27.0);
    double y[] = {1, 1, 1};
    k.axpy(2.0, a, y, 3);
    CHECK(y[2] == 7.0);
    k.centered_axpy(-1.0, b, a, y, 3);
    CHECK(y[0] == 0.0);
    const std::uint8_t miss[] = {1, 0, 1};
    double out[3];
    k.masked_add(out, a, miss, b, 3);
    CHECK(out[0] == 5.0);
    CHECK(out[1] == 2.0);
    CHECK(out[2] == 9.0);
}

TEST_CASE("the active table is one of the compiled ones") {
    const auto& k = rime::simd::kernels();
    bool known = &k == &rime::simd::scalar_kernels();
    for (auto* t : vector_tables()) known = known || &k == t;
    CHECK(known);
}

TEST_CASE("vector kernels agree with the scalar reference") {
    const auto& ref = rime::simd::scalar_kernels();
    const auto tables = vector_tables();
    if (tables.empty()) {
        MESSAGE("no vector kernels on this CPU");
        return;
    }
    std::mt19937_64 gen(11);
    for (const auto* t : tables) {
        INFO(t->name);
        for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 100u, 1001u}) {
            INFO("n = " << n);
            const auto x = random_vec(gen, n), c = random_vec(gen, n), v = random_vec(gen, n);
            double mag = 0.0;
            for (std::size_t i = 0; i < n; ++i) mag += std::abs(x[i] * v[i]) + std::abs(c[i] * v[i]);
            close(t->dot(x.data(), v.data(), n), ref.dot(x.data(), v.data(), n), mag);
            close(t->centered_dot(x.data(), c.data(), v.data(), n), ref.centered_dot(x.data(), c.data(), v.data(), n),
                  mag);
            const double sd = ref.squared_distance(x.data(), c.data(), n);
            close(t->squared_distance(x.data(), c.data(), n), sd, sd);

            auto y1 = random_vec(gen, n);
            auto y2 = y1;
            t->axpy(0.7, x.data(), y1.data(), n);
            ref.axpy(0.7, x.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) close(y1[i], y2[i], std::abs(y2[i]) + std::abs(x[i]));

            t->centered_axpy(-1.3, x.data(), c.data(), y1.data(), n);
            ref.centered_axpy(-1.3, x.data(), c.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i)
                close(y1[i], y2[i], std::abs(y2[i]) + 2 * (std::abs(x[i]) + std::abs(c[i])));

            std::vector<std::uint8_t> miss(n);
            for (std::size_t i = 0; i < n; ++i) miss[i] = static_cast<std::uint8_t>(gen() & 1u);
            std::vector<double> o1(n), o2(n);
            t->masked_add(o1.data(), x.data(), miss.data(), c.data(), n);
            ref.masked_add(o2.data(), x.data(), miss.data(), c.data(), n);
            CHECK(o1 == o2);
        }
    }
}
