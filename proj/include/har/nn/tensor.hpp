// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Matrix aliases, learnable parameters and finiteness checks.
 *
 * Sequence activations are stored time-major as one (steps * batch) x features
 * matrix: row t * batch + b holds sample b at timestep t. A per-row 0/1 vector
 * of the same length marks real (unpadded) timesteps.
 */
#pragma once

#include <har/common.hpp>

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace har::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Mode { kTrain, kInfer };

/// Learnable tensor. Vectors are stored as 1 x n.
template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
  bool decay = false;  // weight matrix, receives the L2 penalty

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols, bool is_weight)
      : name(std::move(n)),
        value(Mat<T>::Zero(rows, cols)),
        grad(Mat<T>::Zero(rows, cols)),
        decay(is_weight) {}

  std::vector<std::size_t> shape() const {
    return {static_cast<std::size_t>(value.rows()), static_cast<std::size_t>(value.cols())};
  }
  void zero_grad() { grad.setZero(); }
};

/// Non-learnable state saved with a model (running statistics etc).
template <typename T>
struct Buffer {
  std::string name;
  Mat<T>* data = nullptr;
};

/// Throws NumericalFault if any entry of `m` is NaN or infinite.
template <typename Derived>
void check_finite(const Eigen::DenseBase<Derived>& m, const std::string& what) {
  if (!m.derived().array().isFinite().all())
    throw NumericalFault("non-finite value in " + what);
}

/// Multiplies each row of `m` by the matching entry of `mask`.
template <typename T, typename Derived>
auto row_scaled(const Eigen::MatrixBase<Derived>& m, const ColVec<T>& mask) {
  return (m.array().colwise() * mask.array()).matrix();
}

}  // namespace har::nn
