// SPDX-License-Identifier: Apache-2.0
/**
 * @file   run_config.hpp
 * @brief  Structured run configuration shared by the train, ablate and eval
 *         commands.
 *
 * JSON layout (every section and key optional, unknown keys rejected):
 *
 *   {
 *     "seed": 1, "precision": "float" | "double",
 *     "data": {"dataset": path, "test_dataset": path, "synth": {...},
 *              "test_fraction": 0.3333, "val_fraction": 0.2, "split_seed": n},
 *     "preprocess": {"theta": 0.1},
 *     "dfd": {"enabled": true, "cutoff": 15},
 *     "augment": {"enabled": false, "translate_range": 20, "scale_lo": 0.8,
 *                 "scale_hi": 1.2, "noise_sigma": 2,
 *                 "copies": {"translate": 0, "scale": 0, "noise": 0, "affine": 1}},
 *     "model": {...}, "train": {...}, "output": {"dir": "runs/out"}
 *   }
 *
 * "data" names either a dataset file or a "synth" block (SynthParams keys);
 * without "test_dataset" a stratified test split of "test_fraction" is made.
 */
#pragma once

#include <har/nn/model.hpp>
#include <har/pose_ingest.hpp>
#include <har/training/trainer.hpp>

#include <json.hpp>
#include <optional>
#include <string>

namespace har::cli {

struct DataConfig {
  std::string dataset;
  std::string test_dataset;
  std::optional<SynthParams> synth;
  double test_fraction = 1.0 / 3.0;
  double val_fraction = 0.2;
  std::optional<std::uint64_t> split_seed;  // defaults to a sub-seed of RunConfig::seed
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string precision = "float";
  DataConfig data;
  PreprocessConfig preprocess;
  bool dfd_enabled = true;
  DfdConfig dfd;
  bool augment_enabled = false;
  AugmentSpec augment;
  nn::ModelConfig model;
  training::TrainConfig train;
  std::string output_dir = "run_out";

  /// Checks every field and that referenced input files exist. Throws
  /// ValidationError.
  void validate() const;

  std::uint64_t model_seed() const { return derive_seed(seed, 10); }
  std::uint64_t train_seed() const { return derive_seed(seed, 11); }
  std::uint64_t augment_seed() const { return derive_seed(seed, 12); }
  std::uint64_t split_seed() const {
    return data.split_seed ? *data.split_seed : derive_seed(seed, 13);
  }
};

RunConfig run_config_from_json(const nlohmann::json& j);
/// Fully-resolved configuration (every default spelled out).
nlohmann::json to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const AugmentSpec& s);
AugmentSpec augment_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthParams& p);
SynthParams synth_params_from_json(const nlohmann::json& j);

}  // namespace har::cli
