#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace ozmm {

using Index = Eigen::Index;

/// Row-major dense matrix, the carrier type for every element kind the
/// library works with (FP64 values, INT8 slices, INT32/INT64 accumulators).
template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixF64 = DenseMatrix<double>;
using MatrixI8 = DenseMatrix<std::int8_t>;
using MatrixI32 = DenseMatrix<std::int32_t>;
using MatrixI64 = DenseMatrix<std::int64_t>;

using VectorF64 = Eigen::VectorXd;

}  // namespace ozmm
