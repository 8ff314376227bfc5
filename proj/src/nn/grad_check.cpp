// SPDX-License-Identifier: Apache-2.0

#include <har/nn/grad_check.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

namespace har::nn {

std::string parameter_kind(const std::string& name) {
  const auto first = name.find('.');
  const auto last = name.rfind('.');
  if (first == std::string::npos) return name;
  std::string layer = name.substr(0, first);
  while (!layer.empty() && std::isdigit(static_cast<unsigned char>(layer.back())))
    layer.pop_back();
  return layer + name.substr(last);
}

GradCheckReport grad_check(const std::vector<Param<double>*>& params,
                           const std::function<double()>& loss, double epsilon,
                           std::size_t per_param, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw ParameterError("grad_check epsilon must be positive");
  GradCheckReport report;
  std::mt19937_64 rng(seed);
  for (auto* p : params) {
    const auto n = static_cast<std::size_t>(p->value.size());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (per_param > 0 && per_param < n) {
      std::shuffle(idx.begin() + 1, idx.end(), rng);
      idx.resize(per_param);
    }
    auto& kind = report.kinds[parameter_kind(p->name)];
    for (auto i : idx) {
      double& v = p->value.data()[i];
      const double saved = v;
      v = saved + epsilon;
      const double up = loss();
      v = saved - epsilon;
      const double down = loss();
      v = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = p->grad.data()[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
      if (kind.checked == 0 || rel > kind.max_rel_error) {
        kind.worst_param = p->name;
        kind.worst_index = i;
      }
      kind.max_rel_error = std::max(kind.max_rel_error, rel);
      kind.max_abs_error = std::max(kind.max_abs_error, abs_err);
      ++kind.checked;
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace har::nn
