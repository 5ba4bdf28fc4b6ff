#pragma once

// Filling missing entries with pre-determined values, and the guess-adjusted
// views X^{i,nu}: present entries unchanged, missing entries fill + nu_j.

#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include "rime/dataset.hpp"
#include "rime/linalg.hpp"

namespace rime {

struct FillSpec {
    enum class Mode { gaussian, zero };

    Mode mode = Mode::zero;
    double eta = 0.0;
    std::uint64_t seed = 0;

    // i.i.d. N(0, eta^2) per missing entry, keyed by (seed, i, j).
    static FillSpec gaussian(double eta, std::uint64_t seed) { return {Mode::gaussian, eta, seed}; }
    static FillSpec zero() { return {Mode::zero, 0.0, 0}; }
};

class AdjustedView;

// X^{i,0}: agrees with the base matrix on present entries. Fill values depend
// only on the base mask and the FillSpec. The base matrix must outlive this
// object.
class CompletedMatrix {
public:
    CompletedMatrix(const IncompleteMatrix& base, const FillSpec& spec);

    const IncompleteMatrix& base() const noexcept { return *base_; }
    const FillSpec& spec() const noexcept { return spec_; }
    std::size_t n_examples() const noexcept { return base_->n_examples(); }
    std::size_t n_dims() const noexcept { return base_->n_dims(); }

    double value(std::size_t i, std::size_t j) const noexcept { return completed_[i * n_dims() + j]; }
    bool missing(std::size_t i, std::size_t j) const noexcept { return missing_[i * n_dims() + j] != 0; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {completed_.data() + i * n_dims(), n_dims()};
    }
    std::span<const std::uint8_t> missing_row(std::size_t i) const noexcept {
        return {missing_.data() + i * n_dims(), n_dims()};
    }

    // Lazy view; nu is copied into the view.
    AdjustedView adjust(std::span<const double> nu) const;

    // Per column, the sorted present values and the sorted fill values.
    // Built on first use; safe to call concurrently.
    struct SortedColumn {
        std::vector<double> present;
        std::vector<double> fill;
    };
    const std::vector<SortedColumn>& sorted_columns() const;

private:
    const IncompleteMatrix* base_;
    FillSpec spec_;
    std::vector<double> completed_;
    std::vector<std::uint8_t> missing_;
    mutable std::once_flag sorted_once_;
    mutable std::vector<SortedColumn> sorted_;
};

// Read-only X^{i,nu}. Holds a reference to its CompletedMatrix.
class AdjustedView final : public RowSource {
public:
    AdjustedView(const CompletedMatrix& c, std::vector<double> nu);

    std::size_t rows() const noexcept override { return c_->n_examples(); }
    std::size_t dims() const noexcept override { return c_->n_dims(); }
    const double* row(std::size_t i, double* scratch) const override;
    bool contiguous() const noexcept override { return zero_shift_; }
    // Exact medians by selection over the pre-sorted present and fill values.
    std::vector<double> column_medians() const override;

    double value(std::size_t i, std::size_t j) const noexcept {
        return c_->missing(i, j) ? c_->value(i, j) + nu_[j] : c_->value(i, j);
    }
    std::span<const double> nu() const noexcept { return nu_; }

private:
    const CompletedMatrix* c_;
    std::vector<double> nu_;
    bool zero_shift_;
};

CompletedMatrix fill(const IncompleteMatrix& m, const FillSpec& spec);

// Presence fractions g_j in [0, 1].
struct GVector {
    std::vector<double> g;

    // g_j = |G cap Gamma_j| / |G| for the reference rows G (0-based, any order).
    static GVector from_presence(const IncompleteMatrix& m, std::span<const std::size_t> reference);
    // Reference set = all rows.
    static GVector from_presence(const IncompleteMatrix& m);

    double min() const noexcept;
};

// (sum_j g_j v_j^2)^{1/2}
double g_norm(std::span<const double> v, const GVector& g);

}  // namespace rime
