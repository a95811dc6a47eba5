#pragma once

#include <Eigen/Dense>

#include <string>

namespace sxtract::nn {

using Scalar = double;
using Index = Eigen::Index;

/// Dense row-major storage used for every value in the computation graph.
/// Vectors are 1 x n rows so that sequences stack as T x n matrices.
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::string shape_string(Index rows, Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

}  // namespace sxtract::nn
