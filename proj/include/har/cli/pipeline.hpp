// SPDX-License-Identifier: Apache-2.0
/**
 * @file   pipeline.hpp
 * @brief  Config-driven experiment pipeline used by `har train` and
 *         `har ablate`: data preparation, training, test evaluation.
 */
#pragma once

#include <har/cli/run_config.hpp>
#include <har/dataset.hpp>
#include <har/training/trainer.hpp>

#include <string>

namespace har::cli {

struct PreparedData {
  Dataset train;  // augmented when the config asks for it
  Dataset val;
  Dataset test;   // no DFD applied yet
};

/// Loads or synthesizes the data, makes the test split (unless a test file is
/// given), carves validation out of the remaining sources and augments the
/// training set. Splits are on source clip ids, checked disjoint.
PreparedData prepare_data(const RunConfig& cfg);

/// Appends exactly `extra` affine copies (cfg.augment parameters) to the
/// training set. Meant for data prepared with augmentation disabled.
PreparedData augment_to(PreparedData data, const RunConfig& cfg, std::size_t extra);

struct RunResult {
  training::TrainReport report;  // test_metrics filled in
  std::string checkpoint;        // serialized checkpoint bytes
};

/// Trains a fresh model per `cfg` (precision dispatch inside) and evaluates it
/// on the test split after frame dropout.
RunResult run_experiment(const RunConfig& cfg, const PreparedData& data,
                         const training::EpochCallback& on_epoch = {});

}  // namespace har::cli
