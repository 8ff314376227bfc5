// SPDX-License-Identifier: Apache-2.0

#include <har/nn/config_json.hpp>
#include <har/training/trainer.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace har::training {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train.epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (eval_batch_size < 1) throw ValidationError("train.eval_batch_size must be >= 1");
  if (patience < 0) throw ValidationError("train.patience must be >= 0");
  if (bootstrap_trials < 1) throw ValidationError("train.bootstrap_trials must be >= 1");
  try {
    dfd.validate();
    optimizer.validate();
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"patience", c.patience},
          {"apply_dfd", c.apply_dfd},
          {"dfd_cutoff", c.dfd.cutoff},
          {"head", c.head == HeadKind::kGradientInjection ? "gi" : "many_to_one"},
          {"optimizer", nn::to_json(c.optimizer)},
          {"fit_normalization", c.fit_normalization},
          {"track_train_accuracy", c.track_train_accuracy},
          {"stop_at_train_accuracy", c.stop_at_train_accuracy},
          {"restore_best", c.restore_best},
          {"bootstrap_trials", c.bootstrap_trials},
          {"eval_batch_size", c.eval_batch_size}};
}

TrainConfig train_config_from_json(const json& j) {
  const std::string s = "train";
  nn::reject_unknown_keys(j,
                          {"epochs", "batch_size", "seed", "patience", "apply_dfd",
                           "dfd_cutoff", "head", "optimizer", "fit_normalization",
                           "track_train_accuracy", "stop_at_train_accuracy", "restore_best",
                           "bootstrap_trials", "eval_batch_size"},
                          s);
  TrainConfig c;
  nn::read_key(j, "epochs", c.epochs, s);
  nn::read_key(j, "batch_size", c.batch_size, s);
  nn::read_key(j, "seed", c.seed, s);
  nn::read_key(j, "patience", c.patience, s);
  nn::read_key(j, "apply_dfd", c.apply_dfd, s);
  nn::read_key(j, "dfd_cutoff", c.dfd.cutoff, s);
  std::string head = "gi";
  nn::read_key(j, "head", head, s);
  if (head == "gi")
    c.head = HeadKind::kGradientInjection;
  else if (head == "many_to_one")
    c.head = HeadKind::kManyToOne;
  else
    throw ValidationError("train.head must be \"gi\" or \"many_to_one\"");
  if (j.contains("optimizer")) c.optimizer = nn::optimizer_config_from_json(j.at("optimizer"));
  nn::read_key(j, "fit_normalization", c.fit_normalization, s);
  nn::read_key(j, "track_train_accuracy", c.track_train_accuracy, s);
  nn::read_key(j, "stop_at_train_accuracy", c.stop_at_train_accuracy, s);
  nn::read_key(j, "restore_best", c.restore_best, s);
  nn::read_key(j, "bootstrap_trials", c.bootstrap_trials, s);
  nn::read_key(j, "eval_batch_size", c.eval_batch_size, s);
  return c;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

json to_json(const TrainReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"ce_loss", e.ce_loss},
                      {"l2_loss", e.l2_loss},
                      {"train_acc", optional_json(e.train_acc)},
                      {"val_acc", optional_json(e.val_acc)}});
  return {{"format", "har-train-report"},
          {"version", 1},
          {"seed", r.seed},
          {"config", r.config},
          {"epochs", epochs},
          {"best_epoch", r.best_epoch},
          {"stop_reason", r.stop_reason},
          {"val_metrics", r.val_metrics ? to_json(*r.val_metrics) : json(nullptr)},
          {"test_metrics", r.test_metrics ? to_json(*r.test_metrics) : json(nullptr)}};
}

std::string report_csv(const TrainReport& r) {
  std::string out = "epoch,ce_loss,l2_loss,train_acc,val_acc\n";
  for (const auto& e : r.epochs)
    out += std::to_string(e.epoch) + "," + csv_number(e.ce_loss) + "," +
           csv_number(e.l2_loss) + "," + csv_number(e.train_acc) + "," +
           csv_number(e.val_acc) + "\n";
  return out;
}

std::string source_clip_id(const std::string& clip_id) {
  return clip_id.substr(0, clip_id.find('#'));
}

void check_disjoint(const Dataset& a, const Dataset& b) {
  std::set<std::string> seen;
  for (const auto& s : a.sequences) seen.insert(source_clip_id(s.clip_id));
  for (const auto& s : b.sequences)
    if (seen.count(source_clip_id(s.clip_id)))
      throw ValidationError("clip '" + source_clip_id(s.clip_id) +
                            "' appears in more than one split");
}

Dataset apply_dfd(const Dataset& data, const DfdConfig& cfg) {
  Dataset out;
  out.class_names = data.class_names;
  for (std::size_t i = 0; i < data.size(); ++i)
    out.add(dynamic_frame_dropout(data.sequences[i], cfg), data.provenance[i]);
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double fraction,
                                             std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("split fraction outside [0, 1]");
  // Sources per class in first-appearance order, then a seeded shuffle.
  std::vector<std::vector<std::string>> sources(data.n_classes());
  std::set<std::string> seen;
  for (const auto& s : data.sequences) {
    const auto src = source_clip_id(s.clip_id);
    if (seen.insert(src).second) sources[static_cast<std::size_t>(s.label)].push_back(src);
  }
  std::set<std::string> second;
  for (std::size_t c = 0; c < sources.size(); ++c) {
    std::mt19937_64 rng(derive_seed(seed, 0x5711u, c));
    std::shuffle(sources[c].begin(), sources[c].end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(sources[c].size())));
    second.insert(sources[c].begin(), sources[c].begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::pair<Dataset, Dataset> out;
  out.first.class_names = out.second.class_names = data.class_names;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& dst = second.count(source_clip_id(data.sequences[i].clip_id)) ? out.second : out.first;
    dst.add(data.sequences[i], data.provenance[i]);
  }
  return out;
}

template <typename T>
std::vector<std::vector<double>> predict_dataset(Model<T>& model, const Dataset& data,
                                                 HeadKind head, std::size_t batch_size) {
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  for (const auto& batch : pad_and_batch(data.sequences, batch_size)) {
    const Mat<T> p = predict_batch(model, batch, head);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(p.cols()));
      for (Eigen::Index c = 0; c < p.cols(); ++c) row[static_cast<std::size_t>(c)] = p(r, c);
      out.push_back(std::move(row));
    }
  }
  return out;
}

template <typename T>
Metrics evaluate(Model<T>& model, const Dataset& data, HeadKind head, int trials,
                 std::uint64_t seed, std::size_t batch_size) {
  if (data.size() == 0) throw ParameterError("evaluate: empty test set");
  std::vector<int> labels;
  for (const auto& s : data.sequences) labels.push_back(s.label);
  return compute_metrics(predict_dataset(model, data, head, batch_size), labels,
                         model.config().n_classes, trials, seed);
}

namespace {

template <typename T>
double top1(Model<T>& model, const Dataset& data, HeadKind head, std::size_t batch_size) {
  const auto probs = predict_dataset(model, data, head, batch_size);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    hits += argmax_lower(probs[i]) == data.sequences[i].label;
  return static_cast<double>(hits) / static_cast<double>(probs.size());
}

template <typename T>
std::vector<Mat<T>> snapshot(Model<T>& model) {
  std::vector<Mat<T>> out;
  for (auto* p : model.params()) out.push_back(p->value);
  for (auto& b : model.buffers()) out.push_back(*b.data);
  return out;
}

template <typename T>
void restore(Model<T>& model, const std::vector<Mat<T>>& snap) {
  std::size_t k = 0;
  for (auto* p : model.params()) p->value = snap[k++];
  for (auto& b : model.buffers()) *b.data = snap[k++];
}

}  // namespace

template <typename T>
TrainReport train(Model<T>& model, const Dataset& train_in, const Dataset& val_in,
                  const TrainConfig& cfg, EpochCallback on_epoch,
                  nn::RmsProp<T>* optimizer) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (train_in.size() == 0) throw ValidationError("empty training set");
  check_disjoint(train_in, val_in);

  const Dataset train_set = cfg.apply_dfd ? apply_dfd(train_in, cfg.dfd) : train_in;
  const Dataset val_set = cfg.apply_dfd ? apply_dfd(val_in, cfg.dfd) : val_in;
  const bool has_val = val_set.size() > 0;

  if (cfg.fit_normalization) {
    std::vector<double> mean, scale;
    nn::fit_input_normalization(train_set.sequences, mean, scale);
    nn::RowVec<T> m(static_cast<Eigen::Index>(mean.size())), s(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m(i) = static_cast<T>(mean[static_cast<std::size_t>(i)]);
      s(i) = static_cast<T>(scale[static_cast<std::size_t>(i)]);
    }
    model.set_input_normalization(m, s);
  }

  TrainReport report;
  report.seed = cfg.seed;
  report.config = to_json(cfg);

  nn::RmsProp<T> local_opt(cfg.optimizer);
  nn::RmsProp<T>& opt = optimizer != nullptr ? *optimizer : local_opt;
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1));
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_val = -1.0;
  int since_best = 0;
  std::vector<Mat<T>> best;
  report.stop_reason = "max_epochs";

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochStats st;
    st.epoch = epoch;
    double weight = 0.0;
    std::size_t bi = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++bi) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const PoseSequence*> ptrs;
      for (std::size_t i = start; i < end; ++i) ptrs.push_back(&train_set.sequences[order[i]]);
      const Batch batch = make_batch(ptrs);
      try {
        const LossParts parts =
            loss_and_gradients(model, batch, cfg.head, nn::Mode::kTrain, dropout_rng);
        opt.step(model.params());
        const auto w = static_cast<double>(batch.batch);
        st.ce_loss += w * parts.ce;
        st.l2_loss += w * parts.l2;
        weight += w;
      } catch (const NumericalFault& e) {
        throw TrainingFault(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(bi) + ")",
                            epoch, bi);
      }
    }
    st.ce_loss /= weight;
    st.l2_loss /= weight;
    const bool need_train_acc = cfg.track_train_accuracy || cfg.stop_at_train_accuracy <= 1.0;
    if (need_train_acc) st.train_acc = top1(model, train_set, cfg.head, cfg.eval_batch_size);
    if (has_val) st.val_acc = top1(model, val_set, cfg.head, cfg.eval_batch_size);
    report.epochs.push_back(st);
    if (on_epoch) on_epoch(st);

    if (has_val) {
      if (*st.val_acc > best_val) {
        best_val = *st.val_acc;
        report.best_epoch = epoch;
        since_best = 0;
        if (cfg.restore_best) best = snapshot(model);
      } else if (++since_best >= cfg.patience && cfg.patience > 0) {
        report.stop_reason = "early_stop";
        break;
      }
    }
    if (st.train_acc && *st.train_acc >= cfg.stop_at_train_accuracy) {
      report.stop_reason = "train_accuracy_reached";
      break;
    }
  }

  if (has_val && cfg.restore_best && !best.empty()) {
    restore(model, best);
  } else {
    report.best_epoch = -1;
  }
  if (has_val)
    report.val_metrics =
        evaluate(model, val_set, cfg.head, cfg.bootstrap_trials, derive_seed(cfg.seed, 3),
                 cfg.eval_batch_size);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

#define HAR_INSTANTIATE(T)                                                                   \
  template TrainReport train<T>(Model<T>&, const Dataset&, const Dataset&, const TrainConfig&, \
                                EpochCallback, nn::RmsProp<T>*);                             \
  template std::vector<std::vector<double>> predict_dataset<T>(Model<T>&, const Dataset&,    \
                                                               HeadKind, std::size_t);       \
  template Metrics evaluate<T>(Model<T>&, const Dataset&, HeadKind, int, std::uint64_t,      \
                               std::size_t);
HAR_INSTANTIATE(float)
HAR_INSTANTIATE(double)
#undef HAR_INSTANTIATE

}  // namespace har::training
