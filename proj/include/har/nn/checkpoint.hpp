// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Model checkpoint file.
 *
 * Layout:
 *
 *   "HARCKPT1\n" | u64 header_bytes | header (JSON text)
 *   f64 little-endian payload for each tensor listed in header["tensors"],
 *   in listed order, row-major.
 *
 * The header carries the model configuration, class names, preprocessing
 * threshold, frame-dropout cutoff and GI width, then the tensor directory:
 * parameters, buffers (running statistics, input normalization) and RMSprop
 * accumulators. Values round-trip exactly for both float and double models.
 */
#pragma once

#include <har/nn/model.hpp>
#include <har/nn/optimizer.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace har::nn {

struct CheckpointMeta {
  std::vector<std::string> class_names;
  double theta = 0.1;
  double dfd_cutoff = 15.0;
  bool dfd_enabled = true;
  std::string precision = "double";
  std::string head = "gi";  // "gi" or "many_to_one"
  OptimizerConfig optimizer;
};

template <typename T>
std::string serialize_checkpoint(Model<T>& model, const RmsProp<T>* opt,
                                 const CheckpointMeta& meta);

template <typename T>
struct LoadedCheckpoint {
  std::unique_ptr<Model<T>> model;
  std::unique_ptr<RmsProp<T>> optimizer;  // null when the file has no state
  CheckpointMeta meta;
};

/// Rebuilds a model of scalar type T regardless of the stored precision.
template <typename T>
LoadedCheckpoint<T> deserialize_checkpoint(const std::string& bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, Model<T>& model,
                     const RmsProp<T>* opt, const CheckpointMeta& meta);

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path);

/// Reads only the header (for precision dispatch and inspection).
CheckpointMeta peek_checkpoint_meta(const std::filesystem::path& path, ModelConfig* cfg);

}  // namespace har::nn
