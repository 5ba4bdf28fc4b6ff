#include "rime/simd.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#define RIME_HAVE_NEON 1
#include <arm_neon.h>
#endif

namespace rime::simd {

#if RIME_HAVE_NEON
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

double centered_dot(const double* x, const double* c, const double* v, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(x + k), vld1q_f64(c + k));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(x + k + 2), vld1q_f64(c + k + 2));
        acc0 = vfmaq_f64(acc0, d0, vld1q_f64(v + k));
        acc1 = vfmaq_f64(acc1, d1, vld1q_f64(v + k + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; k < n; ++k) s += (x[k] - c[k]) * v[k];
    return s;
}

double squared_distance(const double* x, const double* c, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(x + k), vld1q_f64(c + k));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(x + k + 2), vld1q_f64(c + k + 2));
        acc0 = vfmaq_f64(acc0, d0, d0);
        acc1 = vfmaq_f64(acc1, d1, d1);
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; k < n; ++k) {
        const double t = x[k] - c[k];
        s += t * t;
    }
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), a, vld1q_f64(x + k)));
    for (; k < n; ++k) y[k] += alpha * x[k];
}

void centered_axpy(double alpha, const double* x, const double* c, double* y, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(x + k), vld1q_f64(c + k));
        vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), a, d));
    }
    for (; k < n; ++k) y[k] += alpha * (x[k] - c[k]);
}

void masked_add(double* out, const double* base, const std::uint8_t* missing,
                const double* shift, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = missing[k] ? base[k] + shift[k] : base[k];
}

constexpr KernelTable kNeon{
    "neon", dot, centered_dot, squared_distance, axpy, centered_axpy, masked_add,
};

}  // namespace

namespace detail {
const KernelTable* neon_table_if_compiled() noexcept { return &kNeon; }
}  // namespace detail

#else

namespace detail {
const KernelTable* neon_table_if_compiled() noexcept { return nullptr; }
}  // namespace detail

#endif

}  // namespace rime::simd
