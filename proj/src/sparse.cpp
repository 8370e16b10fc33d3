#include "scnp/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scnp/error.hpp"

namespace scnp {

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets,
                                         bool sum_duplicates) {
    if (cols > std::numeric_limits<std::uint32_t>::max()) {
        throw ShapeMismatch("from_triplets: column count exceeds index width");
    }
    for (const auto& t : triplets) {
        if (t.row >= rows || t.col >= cols) {
            throw ShapeMismatch("from_triplets: coordinate out of range");
        }
        if (!std::isfinite(t.value)) {
            throw NumericError("from_triplets: non-finite value");
        }
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_.assign(rows + 1, 0);
    m.col_idx_.reserve(triplets.size());
    m.values_.reserve(triplets.size());

    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        if (!m.values_.empty() && k > 0 && triplets[k - 1].row == t.row &&
            triplets[k - 1].col == t.col) {
            if (!sum_duplicates) throw InvalidGraph("from_triplets: duplicate coordinate");
            m.values_.back() += t.value;
            continue;
        }
        m.row_ptr_[t.row + 1]++;
        m.col_idx_.push_back(static_cast<std::uint32_t>(t.col));
        m.values_.push_back(t.value);
    }
    for (std::size_t i = 0; i < rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
}

void SparseMatrix::spmm(const DenseMatrix& b, DenseMatrix& c,
                        std::span<const double> vals) const {
    if (b.rows() != cols_) throw ShapeMismatch("spmm: inner dimensions disagree");
    const double* v = vals.empty() ? values_.data() : vals.data();
    if (!vals.empty() && vals.size() != values_.size()) {
        throw ShapeMismatch("spmm: value override has wrong length");
    }
    const std::size_t k = b.cols();
    if (c.rows() != rows_ || c.cols() != k) c = DenseMatrix(rows_, k);
    else c.fill(0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double* out = c.data() + i * k;
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            const double a = v[p];
            const double* src = b.data() + static_cast<std::size_t>(col_idx_[p]) * k;
            for (std::size_t j = 0; j < k; ++j) out[j] += a * src[j];
        }
    }
}

void SparseMatrix::spmm_transposed(const DenseMatrix& b, DenseMatrix& c,
                                   std::span<const double> vals) const {
    if (b.rows() != rows_) throw ShapeMismatch("spmm_transposed: inner dimensions disagree");
    const double* v = vals.empty() ? values_.data() : vals.data();
    if (!vals.empty() && vals.size() != values_.size()) {
        throw ShapeMismatch("spmm_transposed: value override has wrong length");
    }
    const std::size_t k = b.cols();
    if (c.rows() != cols_ || c.cols() != k) c = DenseMatrix(cols_, k);
    else c.fill(0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* src = b.data() + i * k;
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            const double a = v[p];
            double* out = c.data() + static_cast<std::size_t>(col_idx_[p]) * k;
            for (std::size_t j = 0; j < k; ++j) out[j] += a * src[j];
        }
    }
}

double SparseMatrix::row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p];
    return s;
}

bool SparseMatrix::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            const std::size_t j = col_idx_[p];
            // binary search for (j, i)
            const auto begin = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[j]);
            const auto end = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[j + 1]);
            const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(i));
            if (it == end || *it != i) return false;
            const std::size_t q = static_cast<std::size_t>(it - col_idx_.begin());
            if (std::fabs(values_[p] - values_[q]) > tol) return false;
        }
    }
    return true;
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            d(i, col_idx_[p]) = values_[p];
        }
    }
    return d;
}

}  // namespace scnp
