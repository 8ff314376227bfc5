// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  Classification metrics and bootstrap confidence intervals.
 *
 * Ranking ties are broken by the lower class index: a class ranks ahead of
 * every class with a strictly lower probability and every higher-indexed
 * class with an equal probability. Macro F1 is the unweighted mean over all
 * C classes; a class with no true and no predicted samples contributes 0.
 */
#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <vector>

namespace har::training {

struct BootstrapCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Resamples the flags with replacement `trials` times (mt19937_64 seeded
/// with `seed`, indices from uniform_int_distribution over [0, n-1]) and
/// returns the mean resample accuracy plus the 2.5 / 97.5 percentiles
/// (linear interpolation between order statistics).
BootstrapCi bootstrap_ci(std::span<const int> correct, int trials = 50,
                         std::uint64_t seed = 0);

/// Linear-interpolated percentile, q in [0, 1], of an unsorted sample.
double percentile(std::vector<double> values, double q);

/// 0-based rank of `label` under the tie rule above.
std::size_t label_rank(std::span<const double> probs, int label);
/// Predicted class: highest probability, lowest index among ties.
int argmax_lower(std::span<const double> probs);

struct Metrics {
  std::size_t n = 0;
  int n_classes = 0;
  double top1 = 0.0, top3 = 0.0, top5 = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
  std::vector<double> precision, recall, f1;
  BootstrapCi top1_ci;
  int bootstrap_trials = 50;
  std::uint64_t bootstrap_seed = 0;
};

/// Metrics over per-sample class-probability rows. Empty input throws
/// ParameterError.
Metrics compute_metrics(const std::vector<std::vector<double>>& probs,
                        const std::vector<int>& labels, int n_classes, int trials = 50,
                        std::uint64_t seed = 0);

nlohmann::json to_json(const Metrics& m);

}  // namespace har::training
