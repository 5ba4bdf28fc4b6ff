#include "rime/simd.hpp"

namespace rime::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

double centered_dot(const double* x, const double* c, const double* v, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += (x[k] - c[k]) * v[k];
    return s;
}

double squared_distance(const double* x, const double* c, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = x[k] - c[k];
        s += t * t;
    }
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void centered_axpy(double alpha, const double* x, const double* c, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * (x[k] - c[k]);
}

void masked_add(double* out, const double* base, const std::uint8_t* missing,
                const double* shift, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = missing[k] ? base[k] + shift[k] : base[k];
}

constexpr KernelTable kScalar{
    "scalar", dot, centered_dot, squared_distance, axpy, centered_axpy, masked_add,
};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace rime::simd
