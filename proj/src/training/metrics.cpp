// SPDX-License-Identifier: Apache-2.0

#include <har/common.hpp>
#include <har/training/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace har::training {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BootstrapCi bootstrap_ci(std::span<const int> correct, int trials, std::uint64_t seed) {
  if (correct.empty()) throw ParameterError("bootstrap over an empty flag list");
  if (trials < 1) throw ParameterError("bootstrap needs trials >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, correct.size() - 1);
  std::vector<double> acc(static_cast<std::size_t>(trials));
  for (auto& a : acc) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < correct.size(); ++i) hits += correct[pick(rng)] != 0;
    a = static_cast<double>(hits) / static_cast<double>(correct.size());
  }
  BootstrapCi ci;
  for (double a : acc) ci.mean += a;
  ci.mean /= static_cast<double>(trials);
  ci.lo = percentile(acc, 0.025);
  ci.hi = percentile(acc, 0.975);
  return ci;
}

std::size_t label_rank(std::span<const double> probs, int label) {
  const double p = probs[static_cast<std::size_t>(label)];
  std::size_t rank = 0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    if (probs[j] > p || (probs[j] == p && j < static_cast<std::size_t>(label))) ++rank;
  return rank;
}

int argmax_lower(std::span<const double> probs) {
  int best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j)
    if (probs[j] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  return best;
}

Metrics compute_metrics(const std::vector<std::vector<double>>& probs,
                        const std::vector<int>& labels, int n_classes, int trials,
                        std::uint64_t seed) {
  if (probs.empty()) throw ParameterError("metrics over an empty test set");
  if (probs.size() != labels.size()) throw ShapeError("metrics: one label per row required");
  if (n_classes < 1) throw ParameterError("metrics: n_classes must be >= 1");
  const auto c = static_cast<std::size_t>(n_classes);
  Metrics m;
  m.n = probs.size();
  m.n_classes = n_classes;
  m.bootstrap_trials = trials;
  m.bootstrap_seed = seed;
  m.confusion.assign(c, std::vector<std::int64_t>(c, 0));
  std::vector<int> hit1(m.n);
  std::size_t h3 = 0, h5 = 0;
  for (std::size_t i = 0; i < m.n; ++i) {
    if (probs[i].size() != c) throw ShapeError("metrics: probability row has wrong width");
    const int y = labels[i];
    if (y < 0 || y >= n_classes) throw ParameterError("metrics: label outside [0, C)");
    const std::size_t r = label_rank(probs[i], y);
    hit1[i] = r < 1;
    h3 += r < 3;
    h5 += r < 5;
    ++m.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(argmax_lower(probs[i]))];
  }
  const auto n = static_cast<double>(m.n);
  std::size_t h1 = 0;
  for (int h : hit1) h1 += static_cast<std::size_t>(h);
  m.top1 = static_cast<double>(h1) / n;
  m.top3 = static_cast<double>(h3) / n;
  m.top5 = static_cast<double>(h5) / n;

  m.precision.assign(c, 0.0);
  m.recall.assign(c, 0.0);
  m.f1.assign(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    std::int64_t tp = m.confusion[k][k], row = 0, col = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row += m.confusion[k][j];
      col += m.confusion[j][k];
    }
    m.precision[k] = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    m.recall[k] = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    const double s = m.precision[k] + m.recall[k];
    m.f1[k] = s > 0 ? 2.0 * m.precision[k] * m.recall[k] / s : 0.0;
    m.macro_f1 += m.f1[k];
  }
  m.macro_f1 /= static_cast<double>(c);
  m.top1_ci = bootstrap_ci(hit1, trials, seed);
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  return {{"n", m.n},
          {"n_classes", m.n_classes},
          {"top1", m.top1},
          {"top3", m.top3},
          {"top5", m.top5},
          {"macro_f1", m.macro_f1},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"confusion", m.confusion},
          {"bootstrap",
           {{"trials", m.bootstrap_trials},
            {"seed", m.bootstrap_seed},
            {"mean", m.top1_ci.mean},
            {"lo", m.top1_ci.lo},
            {"hi", m.top1_ci.hi}}}};
}

}  // namespace har::training
