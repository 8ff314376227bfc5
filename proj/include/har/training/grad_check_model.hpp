// SPDX-License-Identifier: Apache-2.0
/**
 * @file   grad_check_model.hpp
 * @brief  End-to-end gradient check of the full model and GI loss.
 */
#pragma once

#include <har/nn/grad_check.hpp>
#include <har/training/gi_head.hpp>

namespace har::training {

struct ModelGradCheckOptions {
  nn::ModelConfig model = small_model();
  std::size_t batch = 2;
  std::size_t steps = 7;
  std::size_t short_length = 5;  // last sample is padded to `steps`
  double epsilon = 1e-5;
  std::uint64_t seed = 0;
  std::size_t per_param = 0;  // 0 = every entry
  bool train_mode = true;     // BN on batch statistics, dropout mask fixed per check
  bool corrupt = false;       // perturb one analytic gradient (negative control)

  static nn::ModelConfig small_model() {
    nn::ModelConfig c;
    c.blstm_layers = 2;
    c.hidden = 4;
    c.dense_hidden = 6;
    c.gi_k = 3;
    c.n_classes = 3;
    c.dropout = 0.0;
    return c;
  }
};

/// Random batch of pose sequences with some masked entries.
Batch random_pose_batch(std::size_t batch, std::size_t steps, std::size_t short_length,
                        int n_classes, std::uint64_t seed);

nn::GradCheckReport grad_check_model(const ModelGradCheckOptions& opt);

}  // namespace har::training
