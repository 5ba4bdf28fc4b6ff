#include "rime/simd.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#define RIME_HAVE_AVX2 1
#include <immintrin.h>

#include <cstring>
#endif

namespace rime::simd {

#if RIME_HAVE_AVX2
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    if (k + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        k += 4;
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

double centered_dot(const double* x, const double* c, const double* v, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(c + k));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(c + k + 4));
        acc0 = _mm256_fmadd_pd(d0, _mm256_loadu_pd(v + k), acc0);
        acc1 = _mm256_fmadd_pd(d1, _mm256_loadu_pd(v + k + 4), acc1);
    }
    if (k + 4 <= n) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(c + k));
        acc0 = _mm256_fmadd_pd(d0, _mm256_loadu_pd(v + k), acc0);
        k += 4;
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) s += (x[k] - c[k]) * v[k];
    return s;
}

double squared_distance(const double* x, const double* c, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(c + k));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(c + k + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    if (k + 4 <= n) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(c + k));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        k += 4;
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) {
        const double t = x[k] - c[k];
        s += t * t;
    }
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    }
    for (; k < n; ++k) y[k] += alpha * x[k];
}

void centered_axpy(double alpha, const double* x, const double* c, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(c + k));
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(a, d, _mm256_loadu_pd(y + k)));
    }
    for (; k < n; ++k) y[k] += alpha * (x[k] - c[k]);
}

void masked_add(double* out, const double* base, const std::uint8_t* missing,
                const double* shift, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        std::int32_t bytes;
        std::memcpy(&bytes, missing + k, sizeof(bytes));
        const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(bytes));
        const __m256d present = _mm256_castsi256_pd(_mm256_cmpeq_epi64(wide, zero));
        const __m256d add = _mm256_andnot_pd(present, _mm256_loadu_pd(shift + k));
        _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_loadu_pd(base + k), add));
    }
    for (; k < n; ++k) out[k] = missing[k] ? base[k] + shift[k] : base[k];
}

constexpr KernelTable kAvx2{
    "avx2", dot, centered_dot, squared_distance, axpy, centered_axpy, masked_add,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table_if_compiled() noexcept { return &kAvx2; }
}  // namespace detail

#else

namespace detail {
const KernelTable* avx2_table_if_compiled() noexcept { return nullptr; }
}  // namespace detail

#endif

}  // namespace rime::simd
