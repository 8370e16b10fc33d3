#include "scnp/dense.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "scnp/error.hpp"

namespace scnp {

namespace {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;

ConstMap map_of(const DenseMatrix& m) {
    return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()),
                    static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

bool DenseMatrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions disagree");
    DenseMatrix c(a.rows(), b.cols());
    Map(c.data(), static_cast<Eigen::Index>(c.rows()), static_cast<Eigen::Index>(c.cols()))
        .noalias() = map_of(a) * map_of(b);
    return c;
}

DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw ShapeMismatch("matmul_ta: row counts disagree");
    DenseMatrix c(a.cols(), b.cols());
    Map(c.data(), static_cast<Eigen::Index>(c.rows()), static_cast<Eigen::Index>(c.cols()))
        .noalias() = map_of(a).transpose() * map_of(b);
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    }
    return t;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("max_abs_diff: shapes disagree");
    double m = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::fabs(pa[i] - pb[i]);
        if (d > m) m = d;
    }
    return m;
}

}  // namespace scnp
