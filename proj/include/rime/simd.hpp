#pragma once

// Row kernels used by every hot loop in the library.
//
// Each kernel has a scalar reference implementation and, where the target
// allows it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at first use from the running CPU; RIME_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace rime::simd {

struct KernelTable {
    std::string_view name;

    // sum_k a[k] * b[k]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_k (x[k] - c[k]) * v[k]
    double (*centered_dot)(const double* x, const double* c, const double* v, std::size_t n);
    // sum_k (x[k] - c[k])^2
    double (*squared_distance)(const double* x, const double* c, std::size_t n);
    // y[k] += alpha * x[k]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y[k] += alpha * (x[k] - c[k])
    void (*centered_axpy)(double alpha, const double* x, const double* c, double* y,
                          std::size_t n);
    // out[k] = base[k] + (missing[k] ? shift[k] : 0)
    void (*masked_add)(double* out, const double* base, const std::uint8_t* missing,
                       const double* shift, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

// nullptr when the variant was not compiled in or the CPU lacks the features.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

// The table used by the library.
const KernelTable& kernels() noexcept;

namespace detail {
const KernelTable* avx2_table_if_compiled() noexcept;
const KernelTable* neon_table_if_compiled() noexcept;
}  // namespace detail

}  // namespace rime::simd
