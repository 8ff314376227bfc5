// SPDX-License-Identifier: Apache-2.0

#include <har/cli/pipeline.hpp>
#include <har/common.hpp>
#include <har/nn/checkpoint.hpp>

namespace har::cli {

namespace {

PreparedData split_only(const RunConfig& cfg) {
  Dataset all = cfg.data.synth ? synth_generate(*cfg.data.synth) : load_dataset(cfg.data.dataset);
  all.validate();
  if (all.n_classes() != static_cast<std::size_t>(cfg.model.n_classes))
    throw ValidationError("dataset has " + std::to_string(all.n_classes()) +
                          " classes but model.n_classes is " +
                          std::to_string(cfg.model.n_classes));
  PreparedData out;
  Dataset rest;
  if (!cfg.data.test_dataset.empty()) {
    out.test = load_dataset(cfg.data.test_dataset);
    out.test.validate();
    if (out.test.class_names != all.class_names)
      throw ValidationError("test dataset class names differ from the training dataset");
    rest = std::move(all);
  } else {
    std::tie(rest, out.test) =
        training::stratified_split(all, cfg.data.test_fraction, cfg.split_seed());
  }
  if (cfg.data.val_fraction > 0.0) {
    std::tie(out.train, out.val) =
        training::stratified_split(rest, cfg.data.val_fraction, derive_seed(cfg.split_seed(), 1));
  } else {
    out.train = std::move(rest);
    out.val.class_names = out.train.class_names;
  }
  if (out.train.size() == 0) throw ValidationError("training split is empty");
  if (out.test.size() == 0) throw ValidationError("test split is empty");
  return out;
}

void check_splits(const PreparedData& d) {
  training::check_disjoint(d.train, d.test);
  training::check_disjoint(d.train, d.val);
  training::check_disjoint(d.val, d.test);
}

template <typename T>
RunResult run_typed(const RunConfig& cfg, const PreparedData& data,
                    const training::EpochCallback& on_epoch) {
  nn::Model<T> model(cfg.model, cfg.model_seed());
  nn::RmsProp<T> opt(cfg.train.optimizer);
  training::TrainConfig tc = cfg.train;
  tc.apply_dfd = cfg.dfd_enabled;
  tc.dfd = cfg.dfd;
  tc.seed = cfg.train_seed();
  RunResult out;
  out.report = training::train(model, data.train, data.val, tc, on_epoch, &opt);
  out.report.config = to_json(cfg);
  out.report.config.erase("output");  // where files land is not part of the experiment
  out.report.seed = cfg.seed;
  const Dataset test = cfg.dfd_enabled ? training::apply_dfd(data.test, cfg.dfd) : data.test;
  out.report.test_metrics =
      training::evaluate(model, test, cfg.train.head, cfg.train.bootstrap_trials,
                         derive_seed(cfg.seed, 14), cfg.train.eval_batch_size);

  nn::CheckpointMeta meta;
  meta.class_names = data.train.class_names;
  meta.theta = cfg.preprocess.theta;
  meta.dfd_cutoff = cfg.dfd.cutoff;
  meta.dfd_enabled = cfg.dfd_enabled;
  meta.precision = cfg.precision;
  meta.head = cfg.train.head == training::HeadKind::kGradientInjection ? "gi" : "many_to_one";
  meta.optimizer = cfg.train.optimizer;
  out.checkpoint = nn::serialize_checkpoint(model, &opt, meta);
  return out;
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData d = split_only(cfg);
  if (cfg.augment_enabled) d.train = augment_dataset(d.train, cfg.augment, cfg.augment_seed());
  check_splits(d);
  return d;
}

PreparedData augment_to(PreparedData data, const RunConfig& cfg, std::size_t extra) {
  if (extra > 0)
    data.train = augment_to_size(data.train, cfg.augment, AugmentMode::kAffine, extra,
                                 cfg.augment_seed());
  check_splits(data);
  return data;
}

RunResult run_experiment(const RunConfig& cfg, const PreparedData& data,
                         const training::EpochCallback& on_epoch) {
  cfg.validate();
  if (cfg.precision == "double") return run_typed<double>(cfg, data, on_epoch);
  return run_typed<float>(cfg, data, on_epoch);
}

}  // namespace har::cli
