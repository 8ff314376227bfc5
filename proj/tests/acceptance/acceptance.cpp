// SPDX-License-Identifier: Apache-2.0
/**
 * @file   acceptance.cpp
 * @brief  End-to-end acceptance checks, one PASS/FAIL line per criterion.
 *
 * Usage: acceptance <har-binary> <work-dir> [--only 1,4,8]
 *
 * Criterion 10 (real-data path) is informational: it runs the
 * ingest -> dfd -> train -> eval chain and never affects the exit code. Point
 * HAR_REAL_EXPORTS at a directory holding train/ and test/ export folders
 * plus labels.csv to run it on real keypoint exports; otherwise synthetic
 * exports are generated.
 */

#include <har/cli/pipeline.hpp>
#include <har/cli/run_config.hpp>
#include <har/common.hpp>
#include <har/nn/layers.hpp>
#include <har/training/grad_check_model.hpp>
#include <har/training/metrics.hpp>
#include <har/training/trainer.hpp>

#include "../support/test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#ifndef HAR_CONFIG_DIR
#error "HAR_CONFIG_DIR must point at the configs/ directory"
#endif

using namespace har;
using namespace har::training;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g_har;
fs::path g_work;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int sh(const std::string& cmd, const fs::path& log) {
  const std::string full = cmd + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(full.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

Batch batch_of(const std::vector<PoseSequence>& seqs) {
  std::vector<const PoseSequence*> p;
  for (const auto& s : seqs) p.push_back(&s);
  return make_batch(p);
}

// ---------------------------------------------------------------------------

Outcome c1_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelGradCheckOptions opt;  // 2 layers, hidden 4, gi_k 3, C 3, batch 2, T 7, one padded
  opt.epsilon = 1e-5;
  const auto train_bn = grad_check_model(opt);
  opt.train_mode = false;
  const auto infer_bn = grad_check_model(opt);
  opt.train_mode = true;
  opt.corrupt = true;
  const auto control = grad_check_model(opt);
  const double secs = seconds_since(t0);

  bool pass = secs < 60.0 && !control.passed(1e-4);
  std::string worst;
  double worst_err = 0;
  for (const auto* rep : {&train_bn, &infer_bn})
    for (const auto& [kind, k] : rep->kinds) {
      pass = pass && k.checked > 0 && k.max_rel_error < 1e-4;
      if (k.max_rel_error >= worst_err) {
        worst_err = k.max_rel_error;
        worst = kind;
      }
    }
  return {pass, std::to_string(train_bn.kinds.size()) + " kinds; max rel err " +
                    fmt("%.2e", worst_err) + " (" + worst + "); train-BN " +
                    fmt("%.2e", train_bn.max_rel_error) + ", infer-BN " +
                    fmt("%.2e", infer_bn.max_rel_error) + "; corrupted control " +
                    fmt("%.2e", control.max_rel_error) + "; " + fmt("%.1f s", secs)};
}

Outcome c2_gi_reduction() {
  std::mt19937_64 rng(202);
  double worst = 0;
  for (int c = 0; c < 20; ++c) {
    nn::ModelConfig cfg = ModelGradCheckOptions::small_model();
    cfg.gi_k = 1;
    cfg.hidden = 3 + c % 4;
    nn::Model<double> m(cfg, 1000 + static_cast<std::uint64_t>(c));
    std::vector<PoseSequence> seqs;
    const int n = 1 + c % 4;
    for (int i = 0; i < n; ++i)
      seqs.push_back(test::random_sequence(rng, 2 + (rng() % 14), 3.0, 0.1, false, i % 3,
                                           "c" + std::to_string(i)));
    const Batch b = batch_of(seqs);
    std::mt19937_64 r(0);
    const auto gi = forward_gi(m, b, 1, nn::Mode::kInfer, r);
    const auto m2o = forward_many_to_one(m, b, nn::Mode::kInfer, r);
    worst = std::max(worst, (gi.logits - m2o).cwiseAbs().maxCoeff());
    const double l_gi = gi_loss(gi, b.labels).loss;
    const double l_m2o = nn::softmax_cross_entropy(m2o, b.labels).loss;
    worst = std::max(worst, std::abs(l_gi - l_m2o));
    std::mt19937_64 r1(9), r2(9);
    worst = std::max(worst, std::abs(loss_only(m, b, HeadKind::kGradientInjection,
                                               nn::Mode::kTrain, r1).total() -
                                     loss_only(m, b, HeadKind::kManyToOne, nn::Mode::kTrain, r2)
                                         .total()));
    const auto p1 = predict_batch(m, b, HeadKind::kGradientInjection);
    const auto p2 = predict_batch(m, b, HeadKind::kManyToOne);
    worst = std::max(worst, (p1 - p2).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, "20 cases; max |difference| in logits, loss, prediction " +
                              fmt("%.2e", worst)};
}

Outcome c3_gradient_reach() {
  std::mt19937_64 rng(303);
  nn::ModelConfig cfg = ModelGradCheckOptions::small_model();
  cfg.gi_k = 4;
  nn::Model<double> m(cfg, 31);
  const Batch b = batch_of({test::random_sequence(rng, 10, 3.0, 0.1, false, 1, "reach")});
  std::mt19937_64 r(0);
  Mat<double> top = m.forward_stack(b, nn::Mode::kInfer, r);
  auto loss_at = [&](const Mat<double>& t) {
    return gi_loss(head_on_top(m, t, b, 4), b.labels).loss;
  };
  const auto steps = head_on_top(m, top, b, 4);
  const auto hl = gi_loss(steps, b.labels);
  m.zero_grad();
  const Mat<double> analytic = head_backward_to_top(m, steps, hl.dlogits, top.rows());

  const double eps = 1e-6;
  std::vector<double> fd_norm(10, 0.0);
  double max_rel = 0;
  for (Eigen::Index t = 0; t < 10; ++t)
    for (Eigen::Index j = 0; j < top.cols(); ++j) {
      const double keep = top(t, j);
      top(t, j) = keep + eps;
      const double up = loss_at(top);
      top(t, j) = keep - eps;
      const double down = loss_at(top);
      top(t, j) = keep;
      const double g = (up - down) / (2 * eps);
      fd_norm[static_cast<std::size_t>(t)] = std::max(fd_norm[static_cast<std::size_t>(t)], std::abs(g));
      const double a = analytic(t, j);
      max_rel = std::max(max_rel, std::abs(a - g) / std::max({std::abs(a), std::abs(g), 1e-6}));
    }
  std::vector<int> nonzero;
  for (int t = 0; t < 10; ++t)
    if (fd_norm[static_cast<std::size_t>(t)] > 0.0) nonzero.push_back(t);
  std::string list;
  for (int t : nonzero) list += (list.empty() ? "" : ",") + std::to_string(t);
  const bool pass = nonzero == std::vector<int>{6, 7, 8, 9} && max_rel < 1e-5;
  return {pass, "numerically nonzero at t = {" + list + "}; analytic vs finite-difference rel err " +
                    fmt("%.2e", max_rel)};
}

Outcome c4_dfd() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(404);
  const std::vector<double> cutoffs = {0, 2.5, 5, 7.5, 10, 15, 20, 30, 50, 100};
  int oracle_bad = 0, idem_bad = 0, mono_bad = 0;
  for (int c = 0; c < 100; ++c) {
    const auto seq = test::random_sequence(rng, 5 + c % 60, 1.0 + (c % 7), 0.05 * (c % 4),
                                           c % 2 == 0, c % 3, "r" + std::to_string(c));
    for (double cut : cutoffs) {
      const DfdConfig cfg{cut};
      oracle_bad += dfd_kept_indices(seq, cfg) != test::dfd_oracle(seq, cut);
      const auto once = dynamic_frame_dropout(seq, cfg);
      idem_bad += !(dynamic_frame_dropout(once, cfg) == once);
    }
    std::size_t prev = seq.n_frame();
    bool mono = true;
    for (double cut : cutoffs) {
      const std::size_t n = dynamic_frame_dropout(seq, DfdConfig{cut}).n_frame();
      mono = mono && n <= prev;
      prev = n;
    }
    mono_bad += !mono;
  }
  const double secs = seconds_since(t0);
  return {oracle_bad == 0 && idem_bad == 0 && mono_bad == 0 && secs < 10.0,
          "100 sequences x 10 cutoffs; oracle mismatches " + std::to_string(oracle_bad) +
              ", idempotence failures " + std::to_string(idem_bad) +
              ", non-monotone sequences " + std::to_string(mono_bad) + "; " +
              fmt("%.2f s", secs)};
}

Outcome c5_overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  SynthParams sp;
  sp.n_classes = 3;
  sp.n_per_class = 7;
  sp.seed = 55;
  Dataset all = synth_generate(sp);
  Dataset data;
  data.class_names = all.class_names;
  for (std::size_t i = 0; i < 20; ++i) data.add(all.sequences[i]);  // 7 / 7 / 6

  nn::Model<double> model(ModelGradCheckOptions::small_model(), 5);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.batch_size = 4;
  cfg.seed = 5;
  cfg.optimizer.lr = 1e-2;
  cfg.stop_at_train_accuracy = 1.0;
  const Dataset none{{}, data.class_names, {}};
  const TrainReport rep = train(model, data, none, cfg);
  const double acc = rep.epochs.back().train_acc.value_or(0.0);
  const double secs = seconds_since(t0);
  return {acc == 1.0 && secs < 300.0,
          "train top-1 " + fmt("%.3f", acc) + " after " + std::to_string(rep.epochs.size()) +
              " epochs (stop: " + rep.stop_reason + "); " + fmt("%.1f s", secs)};
}

Outcome c6_synthetic() {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::RunConfig cfg = cli::load_run_config(std::string(HAR_CONFIG_DIR) + "/synthetic.json");
  cfg.validate();
  const cli::PreparedData data = cli::prepare_data(cfg);
  std::set<std::string> train_sources;
  for (const auto* d : {&data.train, &data.val})
    for (const auto& s : d->sequences) train_sources.insert(source_clip_id(s.clip_id));
  const cli::RunResult r = cli::run_experiment(cfg, data);
  const auto& m = *r.report.test_metrics;
  const double secs = seconds_since(t0);
  const bool shape = train_sources.size() == 300 && data.test.size() == 150;
  return {shape && m.top1 >= 0.90 && secs < 900.0,
          std::to_string(train_sources.size()) + " train clips (" +
              std::to_string(data.val.size()) + " held for validation) / " +
              std::to_string(data.test.size()) + " test; test top-1 " + fmt("%.4f", m.top1) +
              " [" + fmt("%.3f", m.top1_ci.lo) + ", " + fmt("%.3f", m.top1_ci.hi) +
              "], macro F1 " + fmt("%.4f", m.macro_f1) + "; best epoch " +
              std::to_string(r.report.best_epoch) + "; " + fmt("%.0f s", secs)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    f.push_back(cur);
    rows.push_back(f);
  }
  return rows;
}

Outcome c7_ablation() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = g_work / "ablation";
  fs::remove_all(out);
  const int rc = sh(q(g_har) + " ablate --config " + q(fs::path(HAR_CONFIG_DIR) / "ablation.json") +
                        " --seeds 1,2,3,4,5 --out " + q(out),
                    g_work / "ablation.log");
  if (rc != 0) return {false, "har ablate exited with " + std::to_string(rc)};
  const auto rows = read_csv(out / "ablation.csv");
  std::map<std::string, std::string> median;
  std::string all;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    median[rows[i][0]] = rows[i][6];
    all += (all.empty() ? "" : ", ") + rows[i][0] + " " +
           (rows[i][6].empty() ? "n/a" : fmt("%.3f", std::stod(rows[i][6])));
  }
  const std::set<std::string> expected = {"baseline", "dfd", "dfd_gi", "dfd_gi_jitter",
                                          "dfd_gi_affine"};
  std::set<std::string> got;
  for (const auto& [k, _] : median) got.insert(k);
  bool pass = rows.size() == 6 && got == expected && !median["dfd_gi"].empty() &&
              !median["dfd_gi_affine"].empty();
  if (pass) pass = std::stod(median["dfd_gi_affine"]) >= std::stod(median["dfd_gi"]);
  return {pass, std::to_string(rows.size() - 1) + " variant rows over 5 seeds; median test top-1: " +
                    all + "; " + fmt("%.0f s", seconds_since(t0))};
}

Outcome c8_metrics() {
  std::mt19937_64 rng(808);
  int bad = 0, mono_bad = 0;
  for (int c = 0; c < 25; ++c) {
    const int n = 5 + static_cast<int>(rng() % 56);
    const int classes = 2 + static_cast<int>(rng() % 7);
    const bool coarse = c % 3 == 0;  // quantized scores force ties
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> p(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(classes)));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (auto& v : p[static_cast<std::size_t>(i)]) v = coarse ? std::floor(u(rng) * 4) / 4 : u(rng);
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<unsigned>(classes));
    }
    const std::uint64_t seed = rng();
    const Metrics m = compute_metrics(p, y, classes, 50, seed);

    // brute force: rank by stable sort (ties to the lower class index)
    std::array<std::size_t, 3> hits{};
    std::vector<int> pred(static_cast<std::size_t>(n)), correct(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& row = p[static_cast<std::size_t>(i)];
      std::vector<int> idx(static_cast<std::size_t>(classes));
      for (int j = 0; j < classes; ++j) idx[static_cast<std::size_t>(j)] = j;
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
      });
      const std::size_t rank = static_cast<std::size_t>(
          std::find(idx.begin(), idx.end(), y[static_cast<std::size_t>(i)]) - idx.begin());
      hits[0] += rank < 1;
      hits[1] += rank < 3;
      hits[2] += rank < 5;
      pred[static_cast<std::size_t>(i)] = idx[0];
      correct[static_cast<std::size_t>(i)] = rank == 0;
    }
    double f1 = 0;
    for (int k = 0; k < classes; ++k) {
      double tp = 0, fp = 0, fn = 0;
      for (int i = 0; i < n; ++i) {
        const bool pk = pred[static_cast<std::size_t>(i)] == k, yk = y[static_cast<std::size_t>(i)] == k;
        tp += pk && yk;
        fp += pk && !yk;
        fn += !pk && yk;
      }
      f1 += tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    }
    f1 /= classes;
    // bootstrap: resample with the documented generator, sort, interpolate
    std::mt19937_64 brng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(n) - 1);
    std::vector<double> acc;
    double mean = 0;
    for (int t = 0; t < 50; ++t) {
      int h = 0;
      for (int i = 0; i < n; ++i) h += correct[pick(brng)];
      acc.push_back(static_cast<double>(h) / n);
      mean += acc.back();
    }
    mean /= 50;
    std::sort(acc.begin(), acc.end());
    auto pct = [&](double qv) {
      const double pos = qv * 49;
      const auto lo = static_cast<std::size_t>(pos);
      const auto hi = std::min<std::size_t>(lo + 1, 49);
      return acc[lo] + (pos - static_cast<double>(lo)) * (acc[hi] - acc[lo]);
    };
    const double dn = n;
    bad += m.top1 != hits[0] / dn || m.top3 != hits[1] / dn || m.top5 != hits[2] / dn;
    bad += std::abs(m.macro_f1 - f1) > 1e-12;
    bad += std::abs(m.top1_ci.mean - mean) > 1e-12 || m.top1_ci.lo != pct(0.025) ||
           m.top1_ci.hi != pct(0.975);
    mono_bad += !(m.top1 <= m.top3 && m.top3 <= m.top5);
  }
  return {bad == 0 && mono_bad == 0,
          "25 tables; mismatches " + std::to_string(bad) + ", top-k order violations " +
              std::to_string(mono_bad)};
}

Outcome c9_determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string cfg = q(fs::path(HAR_CONFIG_DIR) / "synthetic.json");
  for (const char* run : {"det_a", "det_b"}) {
    fs::remove_all(g_work / run);
    const int rc = sh(q(g_har) + " train --config " + cfg +
                          " --seed 7 --set train.epochs=3 --quiet --out " + q(g_work / run),
                      g_work / (std::string(run) + ".log"));
    if (rc != 0) return {false, std::string("har train (") + run + ") exited with " + std::to_string(rc)};
  }
  bool same = true;
  std::string detail;
  for (const char* f : {"report.json", "checkpoint.ckpt", "curves.csv"}) {
    const std::string a = read_file(g_work / "det_a" / f), b = read_file(g_work / "det_b" / f);
    same = same && a == b;
    detail += std::string(f) + " " + std::to_string(a.size()) + " B " + (a == b ? "identical" : "DIFFERENT") + "; ";
  }
  return {same, detail + fmt("%.0f s", seconds_since(t0))};
}

// Keypoint export for one synthetic sequence: masked joints get confidence
// 0.05 (below the 0.1 threshold) and every 17th frame has no person.
std::string export_of(const PoseSequence& s) {
  std::string doc = "[";
  std::size_t idx = 0;
  for (std::size_t f = 0; f < s.n_frame(); ++f) {
    if (f % 17 == 16) doc += "{\"frame_index\":" + std::to_string(idx++) + ",\"people\":[]},";
    doc += "{\"frame_index\":" + std::to_string(idx++) + ",\"people\":[{\"pose_keypoints_2d\":[";
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      const bool on = s.frames[f].mask[2 * k] != 0;
      doc += (k ? "," : "") + fmt("%.6f", s.frames[f].values[2 * k]) + "," +
             fmt("%.6f", s.frames[f].values[2 * k + 1]) + "," + (on ? "0.9" : "0.05");
    }
    doc += "]}]},";
  }
  doc.back() = ']';
  return doc;
}

Outcome c10_real_data() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = g_work / "realdata";
  fs::remove_all(dir);
  fs::path src;
  std::string origin;
  if (const char* env = std::getenv("HAR_REAL_EXPORTS"); env && *env) {
    src = env;
    origin = "user exports in " + src.string();
  } else {
    src = dir / "exports";
    SynthParams sp;
    sp.n_per_class = 40;
    sp.seed = 77;
    const Dataset d = synth_generate(sp);
    std::string labels;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto& s = d.sequences[i];
      // 50-50 split on clip parity
      const fs::path part = src / (i % 2 ? "test" : "train");
      fs::create_directories(part);
      write_file_atomic(part / (s.clip_id + ".json"), export_of(s));
      labels += s.clip_id + "," + d.class_names[static_cast<std::size_t>(s.label)] + "\n";
    }
    write_file_atomic(src / "labels.csv", labels);
    origin = "generated synthetic exports (set HAR_REAL_EXPORTS for real data)";
  }
  fs::create_directories(dir);
  const std::string har = q(g_har);
  for (const char* part : {"train", "test"}) {
    const int rc = sh(har + " ingest --in " + q(src / part) + " --labels " + q(src / "labels.csv") +
                          " --theta 0.1 --out " + q(dir / (std::string(part) + ".bin")),
                      dir / (std::string(part) + "_ingest.log"));
    if (rc != 0) return {false, std::string("ingest of ") + part + " failed, see " +
                                    (dir / (std::string(part) + "_ingest.log")).string()};
  }
  if (sh(har + " dfd --cutoff 15 --in " + q(dir / "train.bin") + " --out " +
             q(dir / "train_dfd.bin") + " --stats " + q(dir / "dfd_stats.csv"),
         dir / "dfd.log") != 0)
    return {false, "dfd failed"};
  const auto stats = read_csv(dir / "dfd_stats.csv");
  double dropped = 0, frames = 0;
  for (std::size_t i = 1; i < stats.size(); ++i) {
    frames += std::stod(stats[i][1]);
    dropped += std::stod(stats[i][3]);
  }
  const double clips = static_cast<double>(stats.size() - 1);

  const Dataset train_set = load_dataset(dir / "train.bin");
  nlohmann::json cfg = {
      {"seed", 3},
      {"data",
       {{"dataset", (dir / "train.bin").string()},
        {"test_dataset", (dir / "test.bin").string()},
        {"val_fraction", 0.2}}},
      {"dfd", {{"enabled", true}, {"cutoff", 15}}},
      {"augment", {{"enabled", true}, {"copies", {{"affine", 1}}}}},
      {"model",
       {{"blstm_layers", 2}, {"hidden", 16}, {"dense_hidden", 16},
        {"n_classes", train_set.n_classes()}}},
      {"train", {{"epochs", 30}, {"patience", 8}, {"optimizer", {{"lr", 1e-3}}}}},
      {"output", {{"dir", (dir / "run").string()}}}};
  write_file_atomic(dir / "run.json", cfg.dump(2));
  if (sh(har + " train --quiet --config " + q(dir / "run.json"), dir / "train.log") != 0)
    return {false, "train failed, see " + (dir / "train.log").string()};
  if (sh(har + " eval --checkpoint " + q(dir / "run" / "checkpoint.ckpt") + " --dataset " +
             q(dir / "test.bin") + " --out " + q(dir / "eval.json"),
         dir / "eval.log") != 0)
    return {false, "eval failed"};
  const auto ev = nlohmann::json::parse(read_file(dir / "eval.json"));
  const auto rep = nlohmann::json::parse(read_file(dir / "run" / "report.json"));
  const double top1 = ev["metrics"]["top1"].get<double>();
  const bool consistent = top1 == rep["test_metrics"]["top1"].get<double>();
  return {consistent, origin + "; DFD dropped " + fmt("%.1f", dropped / clips) +
                          " frames per clip on average (" + fmt("%.0f", dropped) + " of " +
                          fmt("%.0f", frames) + " over " + fmt("%.0f", clips) +
                          " train clips); eval top-1 " + fmt("%.3f", top1) +
                          (consistent ? " (matches the train report)" : " (DIFFERS from report)") +
                          "; " + fmt("%.0f s", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <har-binary> <work-dir> [--only 1,2,...]\n";
    return 2;
  }
  g_har = fs::absolute(argv[1]).string();
  g_work = fs::absolute(argv[2]);
  fs::create_directories(g_work);
  std::set<int> only;
  for (int i = 3; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    }

  struct Criterion {
    int id;
    const char* title;
    bool gating;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "gradient check, tiny model", true, c1_gradients},
      {2, "GI with k = 1 equals many-to-one", true, c2_gi_reduction},
      {3, "GI gradient reach, k = 4, length 10", true, c3_gradient_reach},
      {4, "DFD oracle, idempotence, cutoff monotonicity", true, c4_dfd},
      {5, "overfit 20 sequences", true, c5_overfit},
      {6, "synthetic end-to-end >= 90% test top-1", true, c6_synthetic},
      {7, "ablation: augmentation median >= no augmentation", true, c7_ablation},
      {8, "metrics oracle", true, c8_metrics},
      {9, "train determinism via the CLI", true, c9_determinism},
      {10, "real-data path (non-gating)", false, c10_real_data},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass && c.gating) ++failed;
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL")
              << (c.gating ? "" : " (non-gating)") << "  " << c.title << " -- " << o.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all gating criteria passed" : std::to_string(failed) + " gating criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
