// SPDX-License-Identifier: Apache-2.0

#include <har/cli/run_config.hpp>
#include <har/common.hpp>
#include <har/nn/config_json.hpp>

#include <filesystem>

namespace har::cli {

using nlohmann::json;
using nn::read_key;
using nn::reject_unknown_keys;

json to_json(const AugmentSpec& s) {
  return {{"translate_range", s.translate_range},
          {"scale_lo", s.scale_lo},
          {"scale_hi", s.scale_hi},
          {"noise_sigma", s.noise_sigma},
          {"copies",
           {{"translate", s.copies[0]},
            {"scale", s.copies[1]},
            {"noise", s.copies[2]},
            {"affine", s.copies[3]}}}};
}

AugmentSpec augment_spec_from_json(const json& j) {
  const std::string s = "augment";
  if (!j.is_object()) throw ValidationError(s + ": expected an object");
  reject_unknown_keys(j, {"enabled", "translate_range", "scale_lo", "scale_hi", "noise_sigma",
                          "copies"},
                      s);
  AugmentSpec a;
  read_key(j, "translate_range", a.translate_range, s);
  read_key(j, "scale_lo", a.scale_lo, s);
  read_key(j, "scale_hi", a.scale_hi, s);
  read_key(j, "noise_sigma", a.noise_sigma, s);
  if (j.contains("copies")) {
    const json& c = j.at("copies");
    const std::string cs = s + ".copies";
    if (!c.is_object()) throw ValidationError(cs + ": expected an object");
    reject_unknown_keys(c, {"translate", "scale", "noise", "affine"}, cs);
    read_key(c, "translate", a.copies[0], cs);
    read_key(c, "scale", a.copies[1], cs);
    read_key(c, "noise", a.copies[2], cs);
    read_key(c, "affine", a.copies[3], cs);
  }
  return a;
}

json to_json(const SynthParams& p) {
  return {{"n_per_class", p.n_per_class},       {"n_classes", p.n_classes},
          {"min_frames", p.min_frames},         {"max_frames", p.max_frames},
          {"amplitude", p.amplitude},           {"base_frequency", p.base_frequency},
          {"position_jitter", p.position_jitter}, {"scale_jitter", p.scale_jitter},
          {"keypoint_noise", p.keypoint_noise}, {"mask_fraction", p.mask_fraction},
          {"seed", p.seed}};
}

SynthParams synth_params_from_json(const json& j) {
  const std::string s = "data.synth";
  if (!j.is_object()) throw ValidationError(s + ": expected an object");
  reject_unknown_keys(j, {"n_per_class", "n_classes", "min_frames", "max_frames", "amplitude",
                          "base_frequency", "position_jitter", "scale_jitter",
                          "keypoint_noise", "mask_fraction", "seed"},
                      s);
  SynthParams p;
  read_key(j, "n_per_class", p.n_per_class, s);
  read_key(j, "n_classes", p.n_classes, s);
  read_key(j, "min_frames", p.min_frames, s);
  read_key(j, "max_frames", p.max_frames, s);
  read_key(j, "amplitude", p.amplitude, s);
  read_key(j, "base_frequency", p.base_frequency, s);
  read_key(j, "position_jitter", p.position_jitter, s);
  read_key(j, "scale_jitter", p.scale_jitter, s);
  read_key(j, "keypoint_noise", p.keypoint_noise, s);
  read_key(j, "mask_fraction", p.mask_fraction, s);
  read_key(j, "seed", p.seed, s);
  return p;
}

namespace {

void require_object(const json& j, const std::string& section) {
  if (!j.is_object()) throw ValidationError(section + ": expected an object");
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  require_object(j, "config");
  reject_unknown_keys(j, {"seed", "precision", "data", "preprocess", "dfd", "augment", "model",
                          "train", "output"},
                      "config");
  RunConfig c;
  read_key(j, "seed", c.seed, "config");
  read_key(j, "precision", c.precision, "config");

  if (j.contains("data")) {
    const json& d = j.at("data");
    require_object(d, "data");
    reject_unknown_keys(d, {"dataset", "test_dataset", "synth", "test_fraction", "val_fraction",
                            "split_seed"},
                        "data");
    read_key(d, "dataset", c.data.dataset, "data");
    read_key(d, "test_dataset", c.data.test_dataset, "data");
    read_key(d, "test_fraction", c.data.test_fraction, "data");
    read_key(d, "val_fraction", c.data.val_fraction, "data");
    if (d.contains("split_seed")) {
      std::uint64_t s = 0;
      read_key(d, "split_seed", s, "data");
      c.data.split_seed = s;
    }
    if (d.contains("synth")) c.data.synth = synth_params_from_json(d.at("synth"));
  }
  if (j.contains("preprocess")) {
    const json& p = j.at("preprocess");
    require_object(p, "preprocess");
    reject_unknown_keys(p, {"theta"}, "preprocess");
    read_key(p, "theta", c.preprocess.theta, "preprocess");
  }
  if (j.contains("dfd")) {
    const json& p = j.at("dfd");
    require_object(p, "dfd");
    reject_unknown_keys(p, {"enabled", "cutoff"}, "dfd");
    read_key(p, "enabled", c.dfd_enabled, "dfd");
    read_key(p, "cutoff", c.dfd.cutoff, "dfd");
  }
  if (j.contains("augment")) {
    c.augment = augment_spec_from_json(j.at("augment"));
    read_key(j.at("augment"), "enabled", c.augment_enabled, "augment");
  }
  if (j.contains("model")) c.model = nn::model_config_from_json(j.at("model"));
  if (j.contains("train")) {
    const json& t = j.at("train");
    require_object(t, "train");
    // frame dropout and seeding live in their own sections
    for (const char* k : {"apply_dfd", "dfd_cutoff", "seed"})
      if (t.contains(k))
        throw ValidationError(std::string("train.") + k +
                              ": set this through the top-level dfd/seed keys");
    c.train = training::train_config_from_json(t);
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    require_object(o, "output");
    reject_unknown_keys(o, {"dir"}, "output");
    read_key(o, "dir", c.output_dir, "output");
  }
  c.train.apply_dfd = c.dfd_enabled;
  c.train.dfd = c.dfd;
  c.train.seed = c.train_seed();
  return c;
}

json to_json(const RunConfig& c) {
  json data = {{"dataset", c.data.dataset},
               {"test_dataset", c.data.test_dataset},
               {"test_fraction", c.data.test_fraction},
               {"val_fraction", c.data.val_fraction},
               {"split_seed", c.split_seed()}};
  if (c.data.synth) data["synth"] = to_json(*c.data.synth);
  json aug = to_json(c.augment);
  aug["enabled"] = c.augment_enabled;
  json train = training::to_json(c.train);
  train.erase("apply_dfd");
  train.erase("dfd_cutoff");
  train.erase("seed");
  return {{"seed", c.seed},
          {"precision", c.precision},
          {"data", data},
          {"preprocess", {{"theta", c.preprocess.theta}}},
          {"dfd", {{"enabled", c.dfd_enabled}, {"cutoff", c.dfd.cutoff}}},
          {"augment", aug},
          {"model", nn::to_json(c.model)},
          {"train", train},
          {"output", {{"dir", c.output_dir}}}};
}

void RunConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string(section) + ": " + e.what());
    }
  };
  if (precision != "float" && precision != "double")
    throw ValidationError("precision must be \"float\" or \"double\"");
  wrap("preprocess", [&] { preprocess.validate(); });
  wrap("dfd", [&] { dfd.validate(); });
  wrap("augment", [&] { augment.validate(); });
  wrap("model", [&] { model.validate(); });
  train.validate();
  if (data.dataset.empty() == !data.synth.has_value())
    throw ValidationError("data: give exactly one of \"dataset\" or \"synth\"");
  if (data.synth) {
    wrap("data.synth", [&] { data.synth->validate(); });
    if (data.synth->n_classes != model.n_classes)
      throw ValidationError("data.synth.n_classes must equal model.n_classes");
  }
  for (const auto* p : {&data.dataset, &data.test_dataset})
    if (!p->empty() && !std::filesystem::is_regular_file(*p))
      throw ValidationError("data: dataset file not found: " + *p);
  if (data.test_dataset.empty() && !(data.test_fraction > 0.0 && data.test_fraction < 1.0))
    throw ValidationError("data.test_fraction must lie in (0, 1)");
  if (!(data.val_fraction >= 0.0 && data.val_fraction < 1.0))
    throw ValidationError("data.val_fraction must lie in [0, 1)");
  if (output_dir.empty()) throw ValidationError("output.dir must not be empty");
}

RunConfig load_run_config(const std::string& path) {
  if (!std::filesystem::is_regular_file(path))
    throw ValidationError("config file not found: " + path);
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace har::cli
