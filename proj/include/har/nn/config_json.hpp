// SPDX-License-Identifier: Apache-2.0
/**
 * @file   config_json.hpp
 * @brief  Strict JSON mapping for model and optimizer configuration.
 *
 * Readers start from defaults, accept only known keys and throw
 * ValidationError on anything else or on a type mismatch.
 */
#pragma once

#include <har/nn/model.hpp>
#include <har/nn/optimizer.hpp>

#include <initializer_list>
#include <json.hpp>
#include <string>

namespace har::nn {

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OptimizerConfig& cfg);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);

/// Throws ValidationError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& section);

/// Reads `key` into `out` if present; type mismatch throws ValidationError.
template <typename V>
void read_key(const nlohmann::json& j, const char* key, V& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(section + "." + key + ": wrong type");
  }
}

}  // namespace har::nn
