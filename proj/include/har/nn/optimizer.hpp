// SPDX-License-Identifier: Apache-2.0
/**
 * @file   optimizer.hpp
 * @brief  RMSprop.
 *
 *   acc <- rho * acc + (1 - rho) * g^2
 *   p   <- p - lr * g / (sqrt(acc) + epsilon)
 */
#pragma once

#include <har/nn/tensor.hpp>

#include <cstdint>
#include <vector>

namespace har::nn {

struct OptimizerConfig {
  double lr = 5e-5;
  double rho = 0.9;
  double epsilon = 1e-8;

  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

template <typename T>
class RmsProp {
 public:
  explicit RmsProp(const OptimizerConfig& cfg);

  /// Applies one update using each parameter's grad. The parameter list must
  /// be the same (same order and shapes) on every call.
  void step(const std::vector<Param<T>*>& params);

  const OptimizerConfig& config() const { return cfg_; }
  std::vector<Mat<T>>& accumulators() { return acc_; }
  const std::vector<Mat<T>>& accumulators() const { return acc_; }
  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t n) { steps_ = n; }

 private:
  OptimizerConfig cfg_;
  std::vector<Mat<T>> acc_;
  std::uint64_t steps_ = 0;
};

}  // namespace har::nn
