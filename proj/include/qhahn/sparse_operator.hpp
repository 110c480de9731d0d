#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace qhahn {

/// Immutable real sparse matrix, convention <row|A|col>. Entries are kept
/// sorted by (row, col) with no stored zeros, so iteration order (and any
/// text dump) is deterministic.
class SparseOperator {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    SparseOperator() = default;
    SparseOperator(std::size_t rows, std::size_t cols);

    /// Duplicated coordinates are summed; entries that sum to exactly 0 are dropped.
    static SparseOperator from_triplets(std::size_t rows, std::size_t cols, std::vector<Entry> entries);
    static SparseOperator identity(std::size_t n);
    static SparseOperator from_dense(const Eigen::MatrixXd& m, double drop_below = 0.0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return entries_.size(); }
    bool square() const noexcept { return rows_ == cols_; }

    std::span<const Entry> entries() const noexcept { return entries_; }
    std::span<const Entry> row(std::size_t r) const;
    double at(std::size_t r, std::size_t c) const;

    std::vector<double> column_sums() const;
    std::vector<double> row_sums() const;
    double max_abs() const;

    Eigen::MatrixXd to_dense() const;
    std::vector<double> apply(std::span<const double> v) const;

    friend bool operator==(const SparseOperator& a, const SparseOperator& b);

private:
    void build_row_index();

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Entry> entries_;
    std::vector<std::size_t> row_start_;  // size rows_ + 1
};

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
SparseOperator operator*(double c, const SparseOperator& a);

SparseOperator compose(const SparseOperator& a, const SparseOperator& b);
SparseOperator add(const SparseOperator& a, const SparseOperator& b);
SparseOperator scale(const SparseOperator& a, double c);
SparseOperator transpose(const SparseOperator& a);
SparseOperator commutator(const SparseOperator& a, const SparseOperator& b);
/// Kronecker product; the left factor is the more significant index.
SparseOperator kron(const SparseOperator& a, const SparseOperator& b);

/// max |a_ij - b_ij| over all entries.
double max_abs_difference(const SparseOperator& a, const SparseOperator& b);

}  // namespace qhahn
