// SPDX-License-Identifier: Apache-2.0

#include <har/nn/optimizer.hpp>

namespace har::nn {

void OptimizerConfig::validate() const {
  if (!(lr >= 0.0)) throw ParameterError("lr must be >= 0");
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
}

template <typename T>
RmsProp<T>::RmsProp(const OptimizerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
}

template <typename T>
void RmsProp<T>::step(const std::vector<Param<T>*>& params) {
  if (acc_.empty()) {
    for (auto* p : params) acc_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
  }
  if (acc_.size() != params.size())
    throw ShapeError("RMSprop: parameter list changed between steps");
  const T rho = static_cast<T>(cfg_.rho);
  const T lr = static_cast<T>(cfg_.lr);
  const T eps = static_cast<T>(cfg_.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& a = acc_[k];
    if (a.rows() != p.value.rows() || a.cols() != p.value.cols())
      throw ShapeError("RMSprop: shape of " + p.name + " changed");
    check_finite(p.grad, "gradient of " + p.name);
    a.array() = rho * a.array() + (T(1) - rho) * p.grad.array().square();
    p.value.array() -= lr * p.grad.array() / (a.array().sqrt() + eps);
  }
  ++steps_;
}

template class RmsProp<float>;
template class RmsProp<double>;

}  // namespace har::nn
