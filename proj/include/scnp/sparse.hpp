#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scnp/dense.hpp"

namespace scnp {

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

// Compressed-sparse-row matrix of doubles. Column indices are sorted and
// unique within each row; stored values are finite.
class SparseMatrix {
public:
    SparseMatrix() = default;

    // sum_duplicates: collapse repeated coordinates by summing, otherwise
    // repeated coordinates are an error.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<Triplet> triplets,
                                      bool sum_duplicates = false);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::uint32_t> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values_mut() { return values_; }

    // C = A·B with B, C dense (C is resized). vals overrides the stored
    // values without copying the structure; it must have nnz() entries.
    void spmm(const DenseMatrix& b, DenseMatrix& c,
              std::span<const double> vals = {}) const;
    // C = Aᵀ·B
    void spmm_transposed(const DenseMatrix& b, DenseMatrix& c,
                         std::span<const double> vals = {}) const;

    double row_sum(std::size_t i) const;
    bool is_symmetric(double tol = 0.0) const;
    DenseMatrix to_dense() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> values_;
};

}  // namespace scnp
