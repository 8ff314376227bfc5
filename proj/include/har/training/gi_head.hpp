// SPDX-License-Identifier: Apache-2.0
/**
 * @file   gi_head.hpp
 * @brief  Gradient-injection head: the shared classifier is attached to the
 *         last K valid timesteps of the top recurrent layer.
 *
 * Training loss is the mean over samples of the mean cross-entropy over each
 * sample's attached steps, so the loss gradient enters the recurrent stack at
 * up to K timesteps per sample. Prediction averages the per-step softmax
 * outputs. With K = 1 this reduces to many-to-one classification.
 */
#pragma once

#include <har/nn/model.hpp>

#include <random>
#include <vector>

namespace har::training {

using nn::ColVec;
using nn::Mat;
using nn::Mode;
using nn::Model;

/// Last min(k, length) valid timesteps of sample b, ascending.
std::vector<std::size_t> gi_timesteps(const Batch& batch, std::size_t b, int k);

template <typename T>
struct StepLogits {
  Mat<T> logits;                     // one row per attached step
  std::vector<std::size_t> offsets;  // sample b owns rows [offsets[b], offsets[b+1])
  std::vector<Eigen::Index> source;  // row of the top-layer output each step reads
  std::vector<std::size_t> timestep; // timestep of each row

  std::size_t steps_of(std::size_t b) const { return offsets[b + 1] - offsets[b]; }
};

/// Applies the head to the last-k valid timesteps of a given top-layer output.
template <typename T>
StepLogits<T> head_on_top(Model<T>& model, const Mat<T>& top, const Batch& batch, int k);

/// Recurrent stack + head.
template <typename T>
StepLogits<T> forward_gi(Model<T>& model, const Batch& batch, int k, Mode mode,
                         std::mt19937_64& rng);

template <typename T>
struct HeadLoss {
  double loss = 0.0;
  Mat<T> dlogits;
};

/// Mean over samples of the mean per-step cross-entropy.
template <typename T>
HeadLoss<T> gi_loss(const StepLogits<T>& steps, const std::vector<int>& labels);

/// Backpropagates step-logit gradients through the head and returns the
/// gradient w.r.t. the top-layer output (zero except at attached rows).
template <typename T>
Mat<T> head_backward_to_top(Model<T>& model, const StepLogits<T>& steps,
                            const Mat<T>& dlogits, Eigen::Index top_rows);

/// Separate many-to-one path: head on each sample's final valid timestep.
template <typename T>
Mat<T> forward_many_to_one(Model<T>& model, const Batch& batch, Mode mode,
                           std::mt19937_64& rng);

/// Ensemble class probabilities per sample: mean softmax over attached steps.
template <typename T>
Mat<T> ensemble_probabilities(const StepLogits<T>& steps);

enum class HeadKind { kGradientInjection, kManyToOne };

struct LossParts {
  double ce = 0.0;
  double l2 = 0.0;
  double total() const { return ce + l2; }
};

/// Zeroes gradients, runs forward and backward, adds the L2 gradient.
template <typename T>
LossParts loss_and_gradients(Model<T>& model, const Batch& batch, HeadKind head,
                             Mode mode, std::mt19937_64& rng);

/// Loss only (no gradients), same definition as loss_and_gradients.
template <typename T>
LossParts loss_only(Model<T>& model, const Batch& batch, HeadKind head, Mode mode,
                    std::mt19937_64& rng);

/// Infer-mode class probabilities for every sample in the batch.
template <typename T>
Mat<T> predict_batch(Model<T>& model, const Batch& batch, HeadKind head);

/// Infer-mode class probabilities (length C) for one sequence.
template <typename T>
std::vector<double> predict(Model<T>& model, const PoseSequence& seq, HeadKind head);

}  // namespace har::training
