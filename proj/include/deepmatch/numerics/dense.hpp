#pragma once

#include <Eigen/Dense>
#include <span>

namespace deepmatch {

/// Row-major dense matrix; one observation per row wherever it holds data.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DenseVector = Eigen::VectorXd;

inline std::span<const double> row_span(const DenseMatrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(DenseMatrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<const double> as_span(const DenseVector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

bool all_finite(std::span<const double> values);

}  // namespace deepmatch
