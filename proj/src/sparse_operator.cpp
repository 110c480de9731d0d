#include "qhahn/sparse_operator.hpp"

#include "qhahn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qhahn {

namespace {

void require_same_shape(const SparseOperator& a, const SparseOperator& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream os;
        os << op << ": dimension mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
           << b.cols();
        throw DomainError(os.str());
    }
}

}  // namespace

SparseOperator::SparseOperator(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    build_row_index();
}

SparseOperator SparseOperator::from_triplets(std::size_t rows, std::size_t cols, std::vector<Entry> entries) {
    for (const auto& e : entries) {
        if (e.row >= rows || e.col >= cols) throw DomainError("from_triplets: index out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseOperator op(rows, cols);
    op.entries_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size();) {
        Entry acc = entries[i];
        std::size_t j = i + 1;
        for (; j < entries.size() && entries[j].row == acc.row && entries[j].col == acc.col; ++j) {
            acc.value += entries[j].value;
        }
        if (acc.value != 0.0) op.entries_.push_back(acc);
        i = j;
    }
    op.build_row_index();
    return op;
}

SparseOperator SparseOperator::identity(std::size_t n) {
    std::vector<Entry> e;
    e.reserve(n);
    for (std::size_t i = 0; i < n; ++i) e.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(e));
}

SparseOperator SparseOperator::from_dense(const Eigen::MatrixXd& m, double drop_below) {
    std::vector<Entry> e;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (std::abs(m(r, c)) > drop_below) {
                e.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c)});
            }
        }
    }
    return from_triplets(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), std::move(e));
}

void SparseOperator::build_row_index() {
    row_start_.assign(rows_ + 1, 0);
    for (const auto& e : entries_) ++row_start_[e.row + 1];
    for (std::size_t r = 0; r < rows_; ++r) row_start_[r + 1] += row_start_[r];
}

std::span<const SparseOperator::Entry> SparseOperator::row(std::size_t r) const {
    if (r >= rows_) throw DomainError("SparseOperator::row: index out of range");
    return std::span<const Entry>(entries_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]);
}

double SparseOperator::at(std::size_t r, std::size_t c) const {
    auto rw = row(r);
    auto it = std::lower_bound(rw.begin(), rw.end(), c, [](const Entry& e, std::size_t col) { return e.col < col; });
    return (it != rw.end() && it->col == c) ? it->value : 0.0;
}

std::vector<double> SparseOperator::column_sums() const {
    std::vector<double> s(cols_, 0.0);
    for (const auto& e : entries_) s[e.col] += e.value;
    return s;
}

std::vector<double> SparseOperator::row_sums() const {
    std::vector<double> s(rows_, 0.0);
    for (const auto& e : entries_) s[e.row] += e.value;
    return s;
}

double SparseOperator::max_abs() const {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, std::abs(e.value));
    return m;
}

Eigen::MatrixXd SparseOperator::to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (const auto& e : entries_) d(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
    return d;
}

std::vector<double> SparseOperator::apply(std::span<const double> v) const {
    if (v.size() != cols_) throw DomainError("SparseOperator::apply: dimension mismatch");
    std::vector<double> out(rows_, 0.0);
    for (const auto& e : entries_) out[e.row] += e.value * v[e.col];
    return out;
}

bool operator==(const SparseOperator& a, const SparseOperator& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
        const auto& x = a.entries_[i];
        const auto& y = b.entries_[i];
        if (x.row != y.row || x.col != y.col || x.value != y.value) return false;
    }
    return true;
}

SparseOperator compose(const SparseOperator& a, const SparseOperator& b) {
    if (a.cols() != b.rows()) throw DomainError("compose: inner dimension mismatch");
    std::vector<SparseOperator::Entry> out;
    std::vector<double> acc(b.cols(), 0.0);
    std::vector<char> touched(b.cols(), 0);
    std::vector<std::size_t> cols;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        cols.clear();
        for (const auto& ea : a.row(r)) {
            for (const auto& eb : b.row(ea.col)) {
                if (!touched[eb.col]) {
                    touched[eb.col] = 1;
                    cols.push_back(eb.col);
                }
                acc[eb.col] += ea.value * eb.value;
            }
        }
        std::sort(cols.begin(), cols.end());
        for (std::size_t c : cols) {
            if (acc[c] != 0.0) out.push_back({r, c, acc[c]});
            acc[c] = 0.0;
            touched[c] = 0;
        }
    }
    return SparseOperator::from_triplets(a.rows(), b.cols(), std::move(out));
}

SparseOperator add(const SparseOperator& a, const SparseOperator& b) {
    require_same_shape(a, b, "add");
    std::vector<SparseOperator::Entry> e(a.entries().begin(), a.entries().end());
    e.insert(e.end(), b.entries().begin(), b.entries().end());
    return SparseOperator::from_triplets(a.rows(), a.cols(), std::move(e));
}

SparseOperator scale(const SparseOperator& a, double c) {
    std::vector<SparseOperator::Entry> e(a.entries().begin(), a.entries().end());
    for (auto& x : e) x.value *= c;
    return SparseOperator::from_triplets(a.rows(), a.cols(), std::move(e));
}

SparseOperator transpose(const SparseOperator& a) {
    std::vector<SparseOperator::Entry> e;
    e.reserve(a.nnz());
    for (const auto& x : a.entries()) e.push_back({x.col, x.row, x.value});
    return SparseOperator::from_triplets(a.cols(), a.rows(), std::move(e));
}

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) {
    if (!a.square() || !b.square() || a.rows() != b.rows()) throw DomainError("commutator: dimension mismatch");
    return add(compose(a, b), scale(compose(b, a), -1.0));
}

SparseOperator kron(const SparseOperator& a, const SparseOperator& b) {
    std::vector<SparseOperator::Entry> e;
    e.reserve(a.nnz() * b.nnz());
    for (const auto& x : a.entries()) {
        for (const auto& y : b.entries()) {
            e.push_back({x.row * b.rows() + y.row, x.col * b.cols() + y.col, x.value * y.value});
        }
    }
    return SparseOperator::from_triplets(a.rows() * b.rows(), a.cols() * b.cols(), std::move(e));
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) { return compose(a, b); }
SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) { return add(a, b); }
SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) { return add(a, scale(b, -1.0)); }
SparseOperator operator*(double c, const SparseOperator& a) { return scale(a, c); }

double max_abs_difference(const SparseOperator& a, const SparseOperator& b) {
    require_same_shape(a, b, "max_abs_difference");
    return (a - b).max_abs();
}

}  // namespace qhahn
