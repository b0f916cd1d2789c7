#pragma once

#include <Eigen/Core>

namespace protoexplain {

using Index = Eigen::Index;

/// Single-channel raster, stored row-major so (row, col) walks memory in scan order.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<double>;

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = MatrixT<double>;

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Vector = VectorT<double>;

template <typename Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using RowVector = RowVectorT<double>;

}  // namespace protoexplain
