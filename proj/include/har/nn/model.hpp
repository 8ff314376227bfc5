// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  Deep BLSTM classifier: [BLSTM -> BN -> dropout] x L, then a
 *         dense -> PReLU -> dense head producing class logits.
 *
 * The recurrent stack and the head are driven separately so that callers can
 * attach the head to any subset of timesteps (see training/gi_head.hpp).
 */
#pragma once

#include <har/nn/layers.hpp>
#include <har/sequence_ops.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace har::nn {

struct ModelConfig {
  int input_dim = static_cast<int>(kPoseDim);
  int blstm_layers = 5;
  int hidden = 128;  // per direction
  int dense_hidden = 64;
  int n_classes = 3;
  double dropout = 0.3;
  double l2 = 1e-4;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-3;
  int gi_k = 5;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }

  /// Batch values mapped to network input: valid entries standardized with
  /// the stored per-feature mean/scale, invalid entries 0. Time-major rows.
  Mat<T> input_matrix(const Batch& batch) const;
  static ColVec<T> row_mask(const Batch& batch);

  /// Runs the recurrent stack and returns the top output, (steps*batch) x 2H.
  Mat<T> forward_stack(const Batch& batch, Mode mode, std::mt19937_64& rng);
  /// Backpropagates a gradient w.r.t. the top output through the stack.
  void backward_stack(const Mat<T>& d_top);

  /// Shared classification head applied row-wise to top-layer features.
  Mat<T> head_forward(const Mat<T>& features);
  /// Returns the gradient w.r.t. the head's input features.
  Mat<T> head_backward(const Mat<T>& d_logits);

  std::vector<Param<T>*> params();
  std::vector<Buffer<T>> buffers();
  std::size_t parameter_count();
  void zero_grad();

  /// l2 * sum of squared weight-matrix entries (biases, BN and PReLU excluded).
  double l2_penalty();
  /// Adds 2 * l2 * W to each weight gradient.
  void add_l2_grad();

  void set_input_normalization(const RowVec<T>& mean, const RowVec<T>& scale);
  const Mat<T>& input_mean() const { return input_mean_; }
  const Mat<T>& input_scale() const { return input_scale_; }

  /// Freezes or unfreezes BN running-average updates in train mode.
  void set_bn_running_update(bool enabled);

  std::size_t last_steps() const { return steps_; }
  std::size_t last_batch() const { return batch_; }
  int top_width() const { return 2 * cfg_.hidden; }

 private:
  ModelConfig cfg_;
  std::vector<BlstmLayer<T>> blstm_;
  std::vector<BatchNormLayer<T>> bn_;
  std::vector<DropoutLayer<T>> drop_;
  DenseLayer<T> dense1_;
  PReluLayer<T> prelu_;
  DenseLayer<T> dense2_;
  Mat<T> input_mean_;   // 1 x input_dim
  Mat<T> input_scale_;  // 1 x input_dim, multiplies (x - mean)
  ColVec<T> mask_;
  std::size_t steps_ = 0, batch_ = 0;
};

/// Per-feature mean and 1/std over valid entries of the given sequences.
/// Features with no valid entry or zero spread get mean 0 / scale 1.
void fit_input_normalization(std::span<const PoseSequence> seqs,
                             std::vector<double>& mean, std::vector<double>& scale);

}  // namespace har::nn
