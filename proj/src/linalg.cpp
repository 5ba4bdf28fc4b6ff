#include "rime/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rime/rng.hpp"
#include "rime/simd.hpp"

namespace rime {

const double* ShiftedRows::row(std::size_t i, double* scratch) const {
    const double* x = base_.row(i, scratch);
    const std::size_t d = dims();
    for (std::size_t j = 0; j < d; ++j) scratch[j] = x[j] + shift_[j];
    return scratch;
}

Matrix materialize(const RowSource& src) {
    Matrix out(src.rows(), src.dims());
    std::vector<double> scratch(src.dims());
    for (std::size_t i = 0; i < src.rows(); ++i) {
        const double* x = src.row(i, scratch.data());
        std::copy(x, x + src.dims(), out.row(i).begin());
    }
    return out;
}

double norm2(std::span<const double> v) noexcept {
    return std::sqrt(simd::kernels().dot(v.data(), v.data(), v.size()));
}

double distance2(std::span<const double> a, std::span<const double> b) noexcept {
    return std::sqrt(simd::kernels().squared_distance(a.data(), b.data(), a.size()));
}

double median_inplace(std::span<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return lower + (upper - lower) / 2.0;
}

std::vector<double> coordinate_median(const RowSource& src) { return src.column_medians(); }

double select_shifted_union(std::span<const double> a, std::span<const double> b, double shift, std::size_t k) {
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    if (k >= na + nb) throw std::out_of_range("order statistic beyond the union size");
    const auto bv = [&](std::size_t j) { return b[j] + shift; };
    // Take i elements from a and k + 1 - i from b; find i such that the
    // (k+1)-prefix is valid.
    std::size_t lo = k + 1 > nb ? k + 1 - nb : 0;
    std::size_t hi = std::min(k + 1, na);
    while (lo < hi) {
        const std::size_t i = lo + (hi - lo) / 2;
        const std::size_t j = k + 1 - i;
        // a[i] < b[j-1] means more elements from a are needed.
        if (j > 0 && i < na && a[i] < bv(j - 1)) {
            lo = i + 1;
        } else {
            hi = i;
        }
    }
    const std::size_t i = lo;
    const std::size_t j = k + 1 - i;
    if (i == 0) return bv(j - 1);
    if (j == 0) return a[i - 1];
    return std::max(a[i - 1], bv(j - 1));
}

std::vector<double> RowSource::column_medians() const {
    const RowSource& src = *this;
    const std::size_t n = src.rows();
    const std::size_t d = src.dims();
    std::vector<double> columns(n * d);
    std::vector<double> scratch(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = src.row(i, scratch.data());
        for (std::size_t j = 0; j < d; ++j) columns[j * n + i] = x[j];
    }
    std::vector<double> med(d);
    for (std::size_t j = 0; j < d; ++j) {
        med[j] = median_inplace(std::span<double>(columns.data() + j * n, n));
    }
    return med;
}

std::vector<double> weighted_mean(const RowSource& src, std::span<const double> u) {
    const std::size_t d = src.dims();
    std::size_t first = 0;
    while (first < src.rows() && !(u[first] > 0.0)) ++first;
    if (first == src.rows()) throw std::invalid_argument("weighted mean with zero total weight");
    std::vector<double> scratch(d);
    // Accumulate offsets from the first weighted row so constant data is
    // reproduced exactly.
    const double* r0 = src.row(first, scratch.data());
    std::vector<double> ref(r0, r0 + d);
    std::vector<double> acc(d, 0.0);
    double total = 0.0;
    const auto& k = simd::kernels();
    for (std::size_t i = first; i < src.rows(); ++i) {
        if (u[i] <= 0.0) continue;
        k.centered_axpy(u[i], src.row(i, scratch.data()), ref.data(), acc.data(), d);
        total += u[i];
    }
    for (std::size_t j = 0; j < d; ++j) acc[j] = ref[j] + acc[j] / total;
    return acc;
}

SecondMomentOperator::SecondMomentOperator(const RowSource& src, std::span<const double> u,
                                           std::span<const double> center)
    : src_(src), u_(u), center_(center), total_(0.0) {
    for (std::size_t i = 0; i < src.rows(); ++i) {
        if (u[i] > 0.0) total_ += u[i];
    }
    if (total_ <= 0.0) throw std::invalid_argument("second moment with zero total weight");
}

void SecondMomentOperator::apply(std::span<const double> v, std::span<double> out) const {
    const std::size_t d = dims();
    const auto& k = simd::kernels();
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> scratch(d);
    for (std::size_t i = 0; i < src_.rows(); ++i) {
        if (u_[i] <= 0.0) continue;
        const double* x = src_.row(i, scratch.data());
        const double t = k.centered_dot(x, center_.data(), v.data(), d);
        k.centered_axpy(u_[i] * t, x, center_.data(), out.data(), d);
    }
    for (auto& o : out) o /= total_;
}

void SecondMomentOperator::apply_block(std::span<const double> v, std::size_t nvec,
                                       std::span<double> out) const {
    const std::size_t d = dims();
    const auto& k = simd::kernels();
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> scratch(d);
    std::vector<double> t(nvec);
    for (std::size_t i = 0; i < src_.rows(); ++i) {
        if (u_[i] <= 0.0) continue;
        const double* x = src_.row(i, scratch.data());
        for (std::size_t l = 0; l < nvec; ++l) t[l] = k.centered_dot(x, center_.data(), v.data() + l * d, d);
        for (std::size_t l = 0; l < nvec; ++l) {
            k.centered_axpy(u_[i] * t[l], x, center_.data(), out.data() + l * d, d);
        }
    }
    for (auto& o : out) o /= total_;
}

double SecondMomentOperator::trace() const {
    const std::size_t d = dims();
    const auto& k = simd::kernels();
    std::vector<double> scratch(d);
    double s = 0.0;
    for (std::size_t i = 0; i < src_.rows(); ++i) {
        if (u_[i] <= 0.0) continue;
        s += u_[i] * k.squared_distance(src_.row(i, scratch.data()), center_.data(), d);
    }
    return s / total_;
}

void SecondMomentOperator::projections(std::span<const double> v, std::span<double> out) const {
    const std::size_t d = dims();
    const auto& k = simd::kernels();
    std::vector<double> scratch(d);
    for (std::size_t i = 0; i < src_.rows(); ++i) {
        out[i] = k.centered_dot(src_.row(i, scratch.data()), center_.data(), v.data(), d);
    }
}

Matrix second_moment_matrix(const RowSource& src, std::span<const double> u,
                            std::span<const double> center) {
    const std::size_t d = src.dims();
    Matrix s(d, d);
    std::vector<double> scratch(d);
    std::vector<double> diff(d);
    double total = 0.0;
    for (std::size_t i = 0; i < src.rows(); ++i) {
        if (u[i] <= 0.0) continue;
        const double* x = src.row(i, scratch.data());
        for (std::size_t j = 0; j < d; ++j) diff[j] = x[j] - center[j];
        for (std::size_t a = 0; a < d; ++a) {
            const double wa = u[i] * diff[a];
            for (std::size_t b = 0; b < d; ++b) s(a, b) += wa * diff[b];
        }
        total += u[i];
    }
    if (total <= 0.0) throw std::invalid_argument("second moment with zero total weight");
    for (auto& v : s.values()) v /= total;
    return s;
}

namespace {

// Relative shortfall of the Rayleigh quotient after k power steps that is
// exceeded with probability below 0.824 e^{-5} (Kuczynski-Wozniakowski bound),
// for a start whose random Gaussian part carries at least half its norm.
double resolve_margin(std::size_t k, std::size_t d) {
    if (k == 0) return 1.0;
    const double m = (std::log(4.0 * static_cast<double>(d)) + 10.0) / (2.0 * static_cast<double>(k) - 1.0);
    return std::min(1.0, m);
}

}  // namespace

EigenEstimate power_iteration(const MatVec& apply, std::span<const double> start,
                              const PowerIterationOptions& opts) {
    const std::size_t d = start.size();
    const auto& k = simd::kernels();
    EigenEstimate est;
    std::vector<double> v(start.begin(), start.end());
    const double n0 = std::sqrt(k.dot(v.data(), v.data(), d));
    if (n0 == 0.0) throw std::invalid_argument("power iteration needs a nonzero start vector");
    for (auto& x : v) x /= n0;

    std::vector<double> w(d);
    double previous = 0.0;
    for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
        apply(v, w);
        const double lambda = k.dot(v.data(), w.data(), d);
        const double wn2 = k.dot(w.data(), w.data(), d);
        est.iterations = it;
        est.value = lambda;
        est.residual = std::sqrt(std::max(0.0, wn2 - lambda * lambda));
        if (wn2 == 0.0) {
            est.vector = v;
            est.converged = true;
            return est;
        }
        const double wn = std::sqrt(wn2);
        for (std::size_t j = 0; j < d; ++j) v[j] = w[j] / wn;
        if (it > 1 && std::abs(lambda - previous) <= opts.relative_tolerance * std::abs(lambda)) {
            est.converged = true;
            break;
        }
        if (opts.resolve_below > 0.0 && it >= opts.min_iterations &&
            lambda <= (1.0 - resolve_margin(it - 1, d)) * opts.resolve_below) {
            est.resolved_below = true;
            break;
        }
        previous = lambda;
    }
    est.vector = std::move(v);
    return est;
}

double symmetric_operator_norm(const Matrix& a, std::size_t max_iterations, double relative_tolerance) {
    const std::size_t d = a.rows();
    if (d == 0) return 0.0;
    rng::Stream s(0x5EEDULL);
    std::vector<double> v(d);
    for (auto& x : v) x = s.normal();
    double nv = norm2(v);
    for (auto& x : v) x /= nv;
    std::vector<double> w(d);
    double previous = -1.0;
    double value = 0.0;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        // Two steps per round so that +lambda / -lambda pairs do not oscillate.
        for (int rep = 0; rep < 2; ++rep) {
            for (std::size_t r = 0; r < d; ++r) {
                w[r] = simd::kernels().dot(a.row(r).data(), v.data(), d);
            }
            value = norm2(w);
            if (value == 0.0) return 0.0;
            for (std::size_t r = 0; r < d; ++r) v[r] = w[r] / value;
        }
        if (std::abs(value - previous) <= relative_tolerance * value) break;
        previous = value;
    }
    return value;
}

}  // namespace rime
