#pragma once

#include <Eigen/Core>

namespace wadapt {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXd = RowMatrix<double>;
using Eigen::Index;
using Eigen::VectorXd;

}  // namespace wadapt
