// SPDX-License-Identifier: Apache-2.0

#include <har/nn/config_json.hpp>

namespace har::nn {

using nlohmann::json;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& section) {
  if (!j.is_object()) throw ValidationError(section + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ValidationError(section + ": unknown key '" + it.key() + "'");
  }
}

json to_json(const ModelConfig& c) {
  return {{"input_dim", c.input_dim},     {"blstm_layers", c.blstm_layers},
          {"hidden", c.hidden},           {"dense_hidden", c.dense_hidden},
          {"n_classes", c.n_classes},     {"dropout", c.dropout},
          {"l2", c.l2},                   {"bn_momentum", c.bn_momentum},
          {"bn_epsilon", c.bn_epsilon},   {"gi_k", c.gi_k}};
}

ModelConfig model_config_from_json(const json& j) {
  const std::string s = "model";
  reject_unknown_keys(j, {"input_dim", "blstm_layers", "hidden", "dense_hidden", "n_classes",
                          "dropout", "l2", "bn_momentum", "bn_epsilon", "gi_k"},
                      s);
  ModelConfig c;
  read_key(j, "input_dim", c.input_dim, s);
  read_key(j, "blstm_layers", c.blstm_layers, s);
  read_key(j, "hidden", c.hidden, s);
  read_key(j, "dense_hidden", c.dense_hidden, s);
  read_key(j, "n_classes", c.n_classes, s);
  read_key(j, "dropout", c.dropout, s);
  read_key(j, "l2", c.l2, s);
  read_key(j, "bn_momentum", c.bn_momentum, s);
  read_key(j, "bn_epsilon", c.bn_epsilon, s);
  read_key(j, "gi_k", c.gi_k, s);
  return c;
}

json to_json(const OptimizerConfig& c) {
  return {{"lr", c.lr}, {"rho", c.rho}, {"epsilon", c.epsilon}};
}

OptimizerConfig optimizer_config_from_json(const json& j) {
  const std::string s = "optimizer";
  reject_unknown_keys(j, {"lr", "rho", "epsilon"}, s);
  OptimizerConfig c;
  read_key(j, "lr", c.lr, s);
  read_key(j, "rho", c.rho, s);
  read_key(j, "epsilon", c.epsilon, s);
  return c;
}

}  // namespace har::nn
