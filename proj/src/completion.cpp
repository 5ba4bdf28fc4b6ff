#include "rime/completion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rime/errors.hpp"
#include "rime/rng.hpp"
#include "rime/simd.hpp"

namespace rime {

CompletedMatrix::CompletedMatrix(const IncompleteMatrix& base, const FillSpec& spec)
    : base_(&base), spec_(spec) {
    if (spec.mode == FillSpec::Mode::gaussian && !(spec.eta >= 0.0)) {
        throw ConfigError("gaussian fill needs eta >= 0");
    }
    const std::size_t n = base.n_examples();
    const std::size_t d = base.n_dims();
    completed_.resize(n * d);
    missing_.resize(n * d);
    const std::uint64_t key = rng::derive(spec.seed, rng::Purpose::fill);
    const bool noisy = spec.mode == FillSpec::Mode::gaussian && spec.eta > 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto mask = base.mask_row(i);
        const auto raw = base.raw_row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t at = i * d + j;
            if (mask[j]) {
                completed_[at] = raw[j];
                missing_[at] = 0;
            } else {
                completed_[at] = noisy ? spec.eta * rng::normal_at(rng::derive(key, i, j)) : 0.0;
                missing_[at] = 1;
            }
        }
    }
}

AdjustedView CompletedMatrix::adjust(std::span<const double> nu) const {
    return AdjustedView(*this, std::vector<double>(nu.begin(), nu.end()));
}

AdjustedView::AdjustedView(const CompletedMatrix& c, std::vector<double> nu)
    : c_(&c), nu_(std::move(nu)) {
    if (nu_.size() != c.n_dims()) throw std::invalid_argument("adjustment vector has wrong length");
    zero_shift_ = std::all_of(nu_.begin(), nu_.end(), [](double x) { return x == 0.0; });
}

const double* AdjustedView::row(std::size_t i, double* scratch) const {
    const auto base = c_->row(i);
    if (zero_shift_) return base.data();
    simd::kernels().masked_add(scratch, base.data(), c_->missing_row(i).data(), nu_.data(), base.size());
    return scratch;
}

const std::vector<CompletedMatrix::SortedColumn>& CompletedMatrix::sorted_columns() const {
    std::call_once(sorted_once_, [this] {
        const std::size_t n = n_examples();
        const std::size_t d = n_dims();
        std::vector<SortedColumn> cols(d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const std::size_t at = i * d + j;
                (missing_[at] ? cols[j].fill : cols[j].present).push_back(completed_[at]);
            }
        }
        for (auto& c : cols) {
            std::sort(c.present.begin(), c.present.end());
            std::sort(c.fill.begin(), c.fill.end());
        }
        sorted_ = std::move(cols);
    });
    return sorted_;
}

std::vector<double> AdjustedView::column_medians() const {
    const auto& cols = c_->sorted_columns();
    const std::size_t n = rows();
    std::vector<double> med(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto& c = cols[j];
        const double upper = select_shifted_union(c.present, c.fill, nu_[j], n / 2);
        if (n % 2 == 1) {
            med[j] = upper;
        } else {
            const double lower = select_shifted_union(c.present, c.fill, nu_[j], n / 2 - 1);
            med[j] = lower + (upper - lower) / 2.0;
        }
    }
    return med;
}

CompletedMatrix fill(const IncompleteMatrix& m, const FillSpec& spec) { return CompletedMatrix(m, spec); }

GVector GVector::from_presence(const IncompleteMatrix& m, std::span<const std::size_t> reference) {
    if (reference.empty()) throw std::invalid_argument("g-vector needs a non-empty reference set");
    GVector out;
    out.g.assign(m.n_dims(), 0.0);
    for (auto i : reference) {
        const auto mask = m.mask_row(i);
        for (std::size_t j = 0; j < m.n_dims(); ++j) out.g[j] += mask[j] ? 1.0 : 0.0;
    }
    for (auto& x : out.g) x /= static_cast<double>(reference.size());
    return out;
}

GVector GVector::from_presence(const IncompleteMatrix& m) {
    std::vector<std::size_t> all(m.n_examples());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return from_presence(m, all);
}

double GVector::min() const noexcept {
    return g.empty() ? 0.0 : *std::min_element(g.begin(), g.end());
}

double g_norm(std::span<const double> v, const GVector& g) {
    if (v.size() != g.g.size()) throw std::invalid_argument("g_norm length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += g.g[j] * v[j] * v[j];
    return std::sqrt(s);
}

}  // namespace rime
