// SPDX-License-Identifier: Apache-2.0
/**
 * @file   trainer.hpp
 * @brief  Training loop, evaluation and dataset splitting.
 */
#pragma once

#include <har/dataset.hpp>
#include <har/nn/optimizer.hpp>
#include <har/training/gi_head.hpp>
#include <har/training/metrics.hpp>

#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>

namespace har::training {

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  int patience = 0;  // epochs without val improvement before stopping; 0 disables
  bool apply_dfd = true;
  DfdConfig dfd;
  HeadKind head = HeadKind::kGradientInjection;
  nn::OptimizerConfig optimizer;
  bool fit_normalization = true;
  bool track_train_accuracy = true;  // infer-mode pass over the train set each epoch
  double stop_at_train_accuracy = 2.0;  // > 1 disables
  bool restore_best = true;  // keep the parameters of the best val epoch
  int bootstrap_trials = 50;
  std::size_t eval_batch_size = 64;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochStats {
  int epoch = 0;
  double ce_loss = 0.0;
  double l2_loss = 0.0;
  std::optional<double> train_acc;
  std::optional<double> val_acc;
};

struct TrainReport {
  nlohmann::json config;  // full echo of the run configuration
  std::uint64_t seed = 0;
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // epoch whose parameters were kept, -1 = last
  std::string stop_reason;
  std::optional<Metrics> val_metrics;
  std::optional<Metrics> test_metrics;
  double wall_seconds = 0.0;  // not part of the serialized report
};

/// Versioned JSON document. Wall-clock time is excluded so the document is
/// reproducible byte-for-byte.
nlohmann::json to_json(const TrainReport& r);
/// epoch,ce_loss,l2_loss,train_acc,val_acc
std::string report_csv(const TrainReport& r);

/// Numerical fault during training, with the position it occurred at.
class TrainingFault : public NumericalFault {
 public:
  TrainingFault(const std::string& what, int epoch, std::size_t batch)
      : NumericalFault(what), epoch(epoch), batch(batch) {}
  int epoch;
  std::size_t batch;
};

/// Source clip of a (possibly augmented) clip id: the part before '#'.
std::string source_clip_id(const std::string& clip_id);

/// Throws ValidationError if any source clip appears in both sets.
void check_disjoint(const Dataset& a, const Dataset& b);

/// Applies DFD to every sequence.
Dataset apply_dfd(const Dataset& data, const DfdConfig& cfg);

/// Per-class split of source clips: round(fraction * n_c) sources of each
/// class go to the second set; augmented copies follow their source.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double fraction,
                                             std::uint64_t seed);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains in place. DFD (if enabled) is applied once to both sets up front.
/// With a non-empty val set and patience > 0, stops early on validation top-1
/// and restores the best parameters. When `optimizer` is given it is used (and
/// left holding the final accumulator state); otherwise a fresh one is made.
template <typename T>
TrainReport train(Model<T>& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg, EpochCallback on_epoch = {},
                  nn::RmsProp<T>* optimizer = nullptr);

/// Class probabilities for every sequence (infer mode), in dataset order.
template <typename T>
std::vector<std::vector<double>> predict_dataset(Model<T>& model, const Dataset& data,
                                                 HeadKind head, std::size_t batch_size = 64);

/// Metrics on a prepared dataset (no DFD applied here).
template <typename T>
Metrics evaluate(Model<T>& model, const Dataset& data, HeadKind head, int trials = 50,
                 std::uint64_t seed = 0, std::size_t batch_size = 64);

}  // namespace har::training
