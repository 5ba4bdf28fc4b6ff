#pragma once

// Row sources and the weighted second-moment machinery shared by the filter
// and the estimator.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rime/dataset.hpp"

namespace rime {

// A complete N x d dataset read one row at a time. Rows may be computed on
// demand into the caller's scratch buffer (length dims()).
class RowSource {
public:
    virtual ~RowSource() = default;
    virtual std::size_t rows() const noexcept = 0;
    virtual std::size_t dims() const noexcept = 0;
    virtual const double* row(std::size_t i, double* scratch) const = 0;
    // True when row() never uses the scratch buffer.
    virtual bool contiguous() const noexcept { return false; }
    // Per-coordinate median over all rows (see median_inplace for ties).
    virtual std::vector<double> column_medians() const;
};

class DenseRows final : public RowSource {
public:
    explicit DenseRows(const Matrix& m) noexcept : data_(m.values()), n_(m.rows()), d_(m.cols()) {}
    DenseRows(std::span<const double> row_major, std::size_t n, std::size_t d) noexcept
        : data_(row_major), n_(n), d_(d) {}

    std::size_t rows() const noexcept override { return n_; }
    std::size_t dims() const noexcept override { return d_; }
    const double* row(std::size_t i, double*) const override { return data_.data() + i * d_; }
    bool contiguous() const noexcept override { return true; }

private:
    std::span<const double> data_;
    std::size_t n_;
    std::size_t d_;
};

// Same rows with a constant vector added to each.
class ShiftedRows final : public RowSource {
public:
    ShiftedRows(const RowSource& base, std::span<const double> shift) noexcept
        : base_(base), shift_(shift) {}
    std::size_t rows() const noexcept override { return base_.rows(); }
    std::size_t dims() const noexcept override { return base_.dims(); }
    const double* row(std::size_t i, double* scratch) const override;

private:
    const RowSource& base_;
    std::span<const double> shift_;
};

Matrix materialize(const RowSource& src);

double norm2(std::span<const double> v) noexcept;
double distance2(std::span<const double> a, std::span<const double> b) noexcept;

// Median of the values; even count gives the midpoint of the two central
// order statistics. Reorders `values`. Requires a non-empty input.
double median_inplace(std::span<double> values);

// Per-coordinate median over all rows; same as src.column_medians().
std::vector<double> coordinate_median(const RowSource& src);

// k-th smallest (0-based) of the union of sorted `a` and the values b[i] + shift
// for sorted `b`, computed without materializing the union.
double select_shifted_union(std::span<const double> a, std::span<const double> b, double shift, std::size_t k);

// sum_i u_i x_i / sum_i u_i over rows with u_i > 0.
std::vector<double> weighted_mean(const RowSource& src, std::span<const double> u);

// Weighted centered second moment S = sum_i u_i (x_i - c)(x_i - c)^T / sum_i u_i,
// applied implicitly.
class SecondMomentOperator {
public:
    SecondMomentOperator(const RowSource& src, std::span<const double> u, std::span<const double> center);

    std::size_t dims() const noexcept { return src_.dims(); }
    void apply(std::span<const double> v, std::span<double> out) const;
    // Multiplies a block of k vectors (column j at v[j*d ... j*d+d)) in one pass.
    void apply_block(std::span<const double> v, std::size_t k, std::span<double> out) const;
    double trace() const;
    // Scalar (x_i - c) . v for every row (zero-weight rows included).
    void projections(std::span<const double> v, std::span<double> out) const;

private:
    const RowSource& src_;
    std::span<const double> u_;
    std::span<const double> center_;
    double total_;
};

// Dense d x d weighted centered second moment, for diagnostics and probes.
Matrix second_moment_matrix(const RowSource& src, std::span<const double> u,
                            std::span<const double> center);

struct PowerIterationOptions {
    double relative_tolerance = 1e-6;
    std::size_t max_iterations = 500;
    // When positive: after min_iterations, stop once the estimate is far
    // enough below this level that the top eigenvalue is (with high
    // probability) below it too. Sets resolved_below.
    double resolve_below = 0.0;
    std::size_t min_iterations = 2;
};

struct EigenEstimate {
    double value = 0.0;
    std::vector<double> vector;
    std::size_t iterations = 0;
    bool converged = false;
    bool resolved_below = false;
    // || A v - value v ||.
    double residual = 0.0;
};

using MatVec = std::function<void(std::span<const double>, std::span<double>)>;

// Top eigenpair of a symmetric positive semidefinite operator.
EigenEstimate power_iteration(const MatVec& apply, std::span<const double> start,
                              const PowerIterationOptions& opts = {});

// Largest |eigenvalue| of a symmetric dense matrix (operator norm).
double symmetric_operator_norm(const Matrix& a, std::size_t max_iterations = 2000,
                               double relative_tolerance = 1e-12);

}  // namespace rime
