#pragma once

// Data model for incomplete matrices: N examples (rows) by d coordinates,
// with an explicit presence mask. Row-major storage throughout.

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rime {

// Payload written under the missing mask. Numeric code never reads it.
double missing_sentinel() noexcept;
bool is_missing_sentinel(double v) noexcept;

// Dense row-major N x d matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// The observed dataset: values plus a presence mask (true = present).
// All-missing rows are legal.
class IncompleteMatrix {
public:
    // n x d matrix with every entry missing. Requires n >= 1, d >= 1.
    IncompleteMatrix(std::size_t n_examples, std::size_t n_dims);
    // Every entry present.
    static IncompleteMatrix from_complete(const Matrix& m);

    std::size_t n_examples() const noexcept { return n_; }
    std::size_t n_dims() const noexcept { return d_; }

    bool present(std::size_t i, std::size_t j) const noexcept { return mask_[i * d_ + j] != 0; }

    double value(std::size_t i, std::size_t j) const noexcept {
        assert(present(i, j) && "read of a missing entry");
        return values_[i * d_ + j];
    }

    void set(std::size_t i, std::size_t j, double v) noexcept {
        values_[i * d_ + j] = v;
        mask_[i * d_ + j] = 1;
    }
    void conceal(std::size_t i, std::size_t j) noexcept {
        values_[i * d_ + j] = missing_sentinel();
        mask_[i * d_ + j] = 0;
    }

    // Raw row storage, sentinels included. Consumers must consult the mask.
    std::span<const double> raw_row(std::size_t i) const noexcept {
        return {values_.data() + i * d_, d_};
    }
    std::span<const std::uint8_t> mask_row(std::size_t i) const noexcept {
        return {mask_.data() + i * d_, d_};
    }

    std::size_t present_count() const noexcept;
    std::size_t present_in_row(std::size_t i) const noexcept;

    // Same mask, and bit-identical values at every present entry.
    friend bool operator==(const IncompleteMatrix& a, const IncompleteMatrix& b) noexcept;

private:
    std::size_t n_;
    std::size_t d_;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
};

// Gamma_j: sorted example indices with coordinate j present.
struct PresenceIndex {
    std::size_t n_examples = 0;
    std::vector<std::vector<std::size_t>> gamma_sets;
    std::vector<std::size_t> counts;

    std::size_t n_dims() const noexcept { return gamma_sets.size(); }
    std::size_t total_present() const noexcept;
    // Rebuilds the N x d presence mask (row-major) from the sets.
    std::vector<std::uint8_t> reconstruct_mask() const;
};

struct CompletenessReport {
    double min_fraction = 0.0;
    std::size_t argmin_coordinate = 0;
    std::vector<double> per_coordinate;

    bool is_gamma_complete(double gamma) const noexcept { return min_fraction >= gamma; }
};

PresenceIndex build_presence_index(const IncompleteMatrix& m);

// min_j |Gamma_j| / n. Requires n >= 1.
CompletenessReport gamma_completeness(const PresenceIndex& idx, std::size_t n);

// Throws NotGammaComplete when some coordinate falls below gamma.
void require_gamma_complete(const IncompleteMatrix& m, double gamma);

}  // namespace rime
