#include "rime/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

#include "rime/errors.hpp"

namespace rime {
namespace {
constexpr std::uint64_t kSentinelBits = 0x7FF80000DEADBEEFULL;
}

double missing_sentinel() noexcept { return std::bit_cast<double>(kSentinelBits); }

bool is_missing_sentinel(double v) noexcept { return std::bit_cast<std::uint64_t>(v) == kSentinelBits; }

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) throw std::invalid_argument("matrix size mismatch");
}

IncompleteMatrix::IncompleteMatrix(std::size_t n_examples, std::size_t n_dims)
    : n_(n_examples), d_(n_dims), values_(n_examples * n_dims, missing_sentinel()),
      mask_(n_examples * n_dims, 0) {
    if (n_ == 0 || d_ == 0) throw std::invalid_argument("matrix needs N >= 1 and d >= 1");
}

IncompleteMatrix IncompleteMatrix::from_complete(const Matrix& m) {
    IncompleteMatrix out(m.rows(), m.cols());
    std::copy(m.values().begin(), m.values().end(), out.values_.begin());
    std::fill(out.mask_.begin(), out.mask_.end(), std::uint8_t{1});
    return out;
}

std::size_t IncompleteMatrix::present_count() const noexcept {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::size_t IncompleteMatrix::present_in_row(std::size_t i) const noexcept {
    const auto r = mask_row(i);
    return static_cast<std::size_t>(std::count(r.begin(), r.end(), std::uint8_t{1}));
}

bool operator==(const IncompleteMatrix& a, const IncompleteMatrix& b) noexcept {
    if (a.n_ != b.n_ || a.d_ != b.d_ || a.mask_ != b.mask_) return false;
    for (std::size_t k = 0; k < a.mask_.size(); ++k) {
        if (a.mask_[k] &&
            std::bit_cast<std::uint64_t>(a.values_[k]) != std::bit_cast<std::uint64_t>(b.values_[k])) {
            return false;
        }
    }
    return true;
}

std::size_t PresenceIndex::total_present() const noexcept {
    std::size_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

std::vector<std::uint8_t> PresenceIndex::reconstruct_mask() const {
    const std::size_t d = n_dims();
    std::vector<std::uint8_t> mask(n_examples * d, 0);
    for (std::size_t j = 0; j < d; ++j) {
        for (auto i : gamma_sets[j]) mask[i * d + j] = 1;
    }
    return mask;
}

PresenceIndex build_presence_index(const IncompleteMatrix& m) {
    PresenceIndex idx;
    idx.n_examples = m.n_examples();
    idx.gamma_sets.resize(m.n_dims());
    idx.counts.assign(m.n_dims(), 0);
    for (std::size_t i = 0; i < m.n_examples(); ++i) {
        const auto mask = m.mask_row(i);
        for (std::size_t j = 0; j < m.n_dims(); ++j) {
            if (mask[j]) idx.gamma_sets[j].push_back(i);
        }
    }
    for (std::size_t j = 0; j < m.n_dims(); ++j) idx.counts[j] = idx.gamma_sets[j].size();
    return idx;
}

CompletenessReport gamma_completeness(const PresenceIndex& idx, std::size_t n) {
    if (n == 0) throw std::invalid_argument("gamma_completeness requires n >= 1");
    CompletenessReport r;
    r.per_coordinate.resize(idx.n_dims());
    r.min_fraction = idx.n_dims() ? 1.0 : 0.0;
    for (std::size_t j = 0; j < idx.n_dims(); ++j) {
        const double f = static_cast<double>(idx.counts[j]) / static_cast<double>(n);
        r.per_coordinate[j] = f;
        if (f < r.min_fraction) {
            r.min_fraction = f;
            r.argmin_coordinate = j;
        }
    }
    return r;
}

void require_gamma_complete(const IncompleteMatrix& m, double gamma) {
    const auto report = gamma_completeness(build_presence_index(m), m.n_examples());
    if (!report.is_gamma_complete(gamma)) {
        throw NotGammaComplete(gamma, report.min_fraction, report.argmin_coordinate);
    }
}

}  // namespace rime
