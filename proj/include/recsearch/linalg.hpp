#pragma once

#include <Eigen/Dense>

namespace recsearch {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using RowMatrixf = RowMatrix<float>;
using RowMatrixd = RowMatrix<double>;
using RowVectorf = RowVector<float>;
using RowVectord = RowVector<double>;

}  // namespace recsearch
