// SPDX-License-Identifier: Apache-2.0
/**
 * @file   grad_check.hpp
 * @brief  Central finite-difference verification of analytic gradients.
 */
#pragma once

#include <har/nn/tensor.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace har::nn {

struct GradCheckKind {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::map<std::string, GradCheckKind> kinds;  // keyed by parameter kind
  double max_rel_error = 0.0;
  std::size_t checked = 0;

  bool passed(double tolerance) const { return checked > 0 && max_rel_error < tolerance; }
};

/// Denominator floor in the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Parameter kind used to group results: "blstm3.bwd.wh" -> "blstm.wh".
std::string parameter_kind(const std::string& name);

/// Compares each Param::grad (filled by the caller) against central
/// differences of `loss`, which must recompute the loss from the current
/// parameter values. At most `per_param` entries per tensor are sampled
/// (0 = all); the first entry of every tensor is always included.
GradCheckReport grad_check(const std::vector<Param<double>*>& params,
                           const std::function<double()>& loss, double epsilon,
                           std::size_t per_param = 0, std::uint64_t seed = 0);

}  // namespace har::nn
