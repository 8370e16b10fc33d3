#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scnp {

// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    void fill(double v) { data_.assign(data_.size(), v); }
    bool all_finite() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Dense products (Eigen-backed). Shapes are checked and raise ShapeMismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);          // a·b
DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b);       // aᵀ·b
DenseMatrix transpose(const DenseMatrix& a);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace scnp
