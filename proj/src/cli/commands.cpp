// SPDX-License-Identifier: Apache-2.0
/**
 * @file   commands.cpp
 * @brief  The `har` commands. Each is a function of its flags, input files
 *         and seed; outputs go through write_file_atomic.
 */

#include <har/cli/commands.hpp>
#include <har/cli/pipeline.hpp>
#include <har/common.hpp>
#include <har/nn/checkpoint.hpp>
#include <har/nn/config_json.hpp>
#include <har/training/grad_check_model.hpp>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace har::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ShapeError*>(&e)) return kExitRuntime;  // internal inconsistency
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ConstraintError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e))
    return kExitValidation;
  return kExitRuntime;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Applies `--set a.b.c=value` overrides to a config document. The value is
/// parsed as JSON when possible, else taken as a string.
void apply_overrides(json& doc, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("--set expects key.path=value, got '" + s + "'");
    std::string pointer = "/" + s.substr(0, eq);
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const std::string raw = s.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    doc[json::json_pointer(pointer)] = value;
  }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  require_file(path, "config file");
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw ValidationError(path + ": not valid JSON");
  apply_overrides(doc, sets);
  return run_config_from_json(doc);
}

// ---------------------------------------------------------------------------
// ingest

struct ManifestEntry {
  std::string clip_id, label;
};

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  require_file(path, "label manifest");
  std::istringstream in(read_file(path));
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected clip_id,label");
    out.push_back({line.substr(0, comma), line.substr(comma + 1)});
  }
  return out;
}

int cmd_ingest(const std::string& in_dir, const std::string& labels_path,
               const std::vector<std::string>& class_order, double theta,
               const std::string& out_path, const std::string& csv_path, std::ostream& out,
               std::ostream& err) {
  PreprocessConfig pre{theta};
  pre.validate();
  if (!fs::is_directory(in_dir)) throw ValidationError("input directory not found: " + in_dir);
  const auto manifest = read_manifest(labels_path);

  std::map<std::string, std::string> label_of;
  for (const auto& e : manifest)
    if (!label_of.emplace(e.clip_id, e.label).second)
      throw ValidationError("label manifest lists clip '" + e.clip_id + "' twice");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no .json keypoint exports in " + in_dir);

  std::vector<std::string> missing;
  for (const auto& f : files)
    if (!label_of.count(f.stem().string())) missing.push_back(f.stem().string());
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("no label in the manifest for clip(s): " + list);
  }

  std::vector<std::string> classes = class_order;
  if (classes.empty()) {
    std::set<std::string> names;
    for (const auto& f : files) names.insert(label_of[f.stem().string()]);
    classes.assign(names.begin(), names.end());
  }

  Dataset data;
  data.class_names = classes;
  std::size_t total_frames = 0, total_skipped = 0;
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    const auto it = std::find(classes.begin(), classes.end(), label_of[id]);
    if (it == classes.end())
      throw ValidationError("clip '" + id + "' has label '" + label_of[id] +
                            "' which is not in --classes");
    auto r = ingest_clip(read_file(f), id, static_cast<int>(it - classes.begin()), pre);
    out << id << ": frames=" << r.sequence.n_frame() << " skipped_empty=" << r.skipped_empty
        << "\n";
    total_frames += r.sequence.n_frame();
    total_skipped += r.skipped_empty;
    data.add(std::move(r.sequence));
  }
  std::set<std::string> present;
  for (const auto& f : files) present.insert(f.stem().string());
  for (const auto& e : manifest)
    if (!present.count(e.clip_id))
      err << "warning: manifest entry '" << e.clip_id << "' has no export file\n";

  data.validate();
  if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
  save_dataset(out_path, data);
  if (!csv_path.empty()) {
    std::ostringstream csv;
    write_dataset_csv(csv, data);
    write_text(csv_path, csv.str());
  }
  out << "clips=" << data.size() << " frames=" << total_frames
      << " skipped_empty=" << total_skipped << " classes=" << classes.size() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dfd / augment / synth

int cmd_dfd(double cutoff, const std::string& in, const std::string& out_path,
            const std::string& stats_path, std::ostream& out) {
  DfdConfig cfg{cutoff};
  cfg.validate();
  require_file(in, "dataset");
  const Dataset data = load_dataset(in);
  const Dataset dropped = training::apply_dfd(data, cfg);
  std::string stats = "clip_id,frames_in,frames_out,dropped\n";
  std::size_t total_in = 0, total_drop = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t a = data.sequences[i].n_frame(), b = dropped.sequences[i].n_frame();
    stats += csv_field(data.sequences[i].clip_id) + "," + std::to_string(a) + "," +
             std::to_string(b) + "," + std::to_string(a - b) + "\n";
    total_in += a;
    total_drop += a - b;
  }
  if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
  save_dataset(out_path, dropped);
  if (!stats_path.empty()) write_text(stats_path, stats);
  out << "clips=" << data.size() << " frames_in=" << total_in << " dropped=" << total_drop;
  if (data.size() > 0)
    out << " mean_dropped_per_clip="
        << static_cast<double>(total_drop) / static_cast<double>(data.size());
  out << "\n";
  return kExitOk;
}

int cmd_augment(const std::string& in, const std::string& out_path, const std::string& spec_path,
                std::uint64_t seed, unsigned workers, std::ostream& out) {
  require_file(in, "dataset");
  AugmentSpec spec;
  if (!spec_path.empty()) {
    require_file(spec_path, "augment spec");
    json j = json::parse(read_file(spec_path), nullptr, false);
    if (j.is_discarded()) throw ValidationError(spec_path + ": not valid JSON");
    spec = augment_spec_from_json(j);
  }
  spec.validate();
  const Dataset data = load_dataset(in);
  const Dataset aug = augment_dataset(data, spec, seed, std::max(1u, workers));
  if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
  save_dataset(out_path, aug);
  out << "originals=" << data.size() << " total=" << aug.size() << "\n";
  return kExitOk;
}

int cmd_synth(SynthParams p, const std::string& out_path, std::ostream& out) {
  p.validate();
  const Dataset data = synth_generate(p);
  if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
  save_dataset(out_path, data);
  out << "clips=" << data.size() << " classes=" << data.n_classes() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct RunFiles {
  std::string report, curves, checkpoint, config, timing;
};

RunFiles run_files(const RunResult& r, const RunConfig& cfg, double seconds) {
  RunFiles f;
  f.report = dump(training::to_json(r.report));
  f.curves = training::report_csv(r.report);
  f.checkpoint = r.checkpoint;
  f.config = dump(to_json(cfg));
  f.timing = dump({{"wall_seconds", seconds}});
  return f;
}

void write_run(const fs::path& dir, const RunFiles& f) {
  fs::create_directories(dir);
  write_file_atomic(dir / "checkpoint.ckpt", f.checkpoint);
  write_file_atomic(dir / "report.json", f.report);
  write_file_atomic(dir / "curves.csv", f.curves);
  write_file_atomic(dir / "config.resolved.json", f.config);
  write_file_atomic(dir / "timing.json", f.timing);
}

training::EpochCallback epoch_logger(std::ostream& out, bool quiet, const std::string& tag) {
  if (quiet) return {};
  return [&out, tag](const training::EpochStats& e) {
    out << tag << "epoch " << e.epoch << " ce=" << e.ce_loss << " l2=" << e.l2_loss;
    if (e.train_acc) out << " train=" << *e.train_acc;
    if (e.val_acc) out << " val=" << *e.val_acc;
    out << "\n" << std::flush;
  };
}

std::string summary_line(const training::TrainReport& r) {
  std::ostringstream s;
  const auto& m = *r.test_metrics;
  s << "test top1=" << m.top1 << " top3=" << m.top3 << " macro_f1=" << m.macro_f1
    << " ci95=[" << m.top1_ci.lo << ", " << m.top1_ci.hi << "] best_epoch=" << r.best_epoch
    << " stop=" << r.stop_reason;
  return s.str();
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              std::optional<std::uint64_t> seed, const std::vector<int>& layers,
              const std::string& out_dir, bool quiet, std::ostream& out) {
  RunConfig base = load_config(config_path, sets);
  if (seed) base.seed = *seed;
  if (!out_dir.empty()) base.output_dir = out_dir;

  // every depth is validated before any work starts
  std::vector<RunConfig> runs;
  if (layers.empty()) {
    runs.push_back(base);
  } else {
    for (int l : layers) {
      RunConfig c = base;
      c.model.blstm_layers = l;
      runs.push_back(c);
    }
  }
  for (const auto& c : runs) c.validate();

  const PreparedData data = prepare_data(base);
  out << "train=" << data.train.size() << " val=" << data.val.size()
      << " test=" << data.test.size() << "\n";

  std::string summary =
      "layers,status,best_epoch,val_top1,test_top1,test_top3,test_macro_f1,ci_lo,ci_hi\n";
  for (const auto& c : runs) {
    const std::string tag = layers.empty() ? "" : "[L" + std::to_string(c.model.blstm_layers) + "] ";
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r = run_experiment(c, data, epoch_logger(out, quiet, tag));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path dir = layers.empty()
                             ? fs::path(c.output_dir)
                             : fs::path(c.output_dir) / ("layers_" + std::to_string(c.model.blstm_layers));
    write_run(dir, run_files(r, c, secs));
    out << tag << summary_line(r.report) << "\n";
    const auto& m = *r.report.test_metrics;
    summary += std::to_string(c.model.blstm_layers) + ",ok," + std::to_string(r.report.best_epoch) +
               "," + (r.report.val_metrics ? num(r.report.val_metrics->top1) : "") + "," +
               num(m.top1) + "," + num(m.top3) + "," + num(m.macro_f1) + "," +
               num(m.top1_ci.lo) + "," + num(m.top1_ci.hi) + "\n";
  }
  if (!layers.empty()) {
    write_text(fs::path(base.output_dir) / "depth_summary.csv", summary);
    write_text(fs::path(base.output_dir) / "config.resolved.json", dump(to_json(base)));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

template <typename T>
training::Metrics eval_typed(const std::string& ckpt, const Dataset& data, int trials,
                             std::uint64_t seed, nn::CheckpointMeta& meta) {
  auto loaded = nn::load_checkpoint<T>(ckpt);
  meta = loaded.meta;
  if (data.n_classes() != static_cast<std::size_t>(loaded.model->config().n_classes))
    throw ValidationError("dataset class count does not match the checkpoint");
  const Dataset prepared =
      meta.dfd_enabled ? training::apply_dfd(data, DfdConfig{meta.dfd_cutoff}) : data;
  const auto head = meta.head == "many_to_one" ? training::HeadKind::kManyToOne
                                               : training::HeadKind::kGradientInjection;
  return training::evaluate(*loaded.model, prepared, head, trials, seed);
}

int cmd_eval(const std::string& ckpt, const std::string& dataset, int trials,
             std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  require_file(ckpt, "checkpoint");
  require_file(dataset, "dataset");
  if (trials < 1) throw ValidationError("--trials must be >= 1");
  const Dataset data = load_dataset(dataset);
  data.validate();
  const nn::CheckpointMeta peek = nn::peek_checkpoint_meta(ckpt, nullptr);
  if (peek.class_names != data.class_names)
    throw ValidationError("dataset class names do not match the checkpoint");
  nn::CheckpointMeta meta;
  const training::Metrics m = peek.precision == "double"
                                  ? eval_typed<double>(ckpt, data, trials, seed, meta)
                                  : eval_typed<float>(ckpt, data, trials, seed, meta);
  out << "n=" << m.n << " top1=" << m.top1 << " top3=" << m.top3 << " top5=" << m.top5
      << " macro_f1=" << m.macro_f1 << " ci95=[" << m.top1_ci.lo << ", " << m.top1_ci.hi
      << "]\n";
  if (!out_path.empty()) {
    json j = {{"format", "har-eval-report"},
              {"version", 1},
              {"checkpoint", fs::path(ckpt).filename().string()},
              {"dfd_enabled", meta.dfd_enabled},
              {"dfd_cutoff", meta.dfd_cutoff},
              {"head", meta.head},
              {"metrics", training::to_json(m)}};
    write_text(out_path, dump(j));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate

struct Variant {
  std::string name;
  RunConfig cfg;
};

std::vector<Variant> ablation_variants(const RunConfig& base) {
  auto make = [&](const char* name, bool dfd, training::HeadKind head,
                  std::array<int, kNumAugmentModes> copies) {
    RunConfig c = base;
    c.dfd_enabled = dfd;
    c.train.head = head;
    c.augment.copies = copies;
    c.augment_enabled = std::any_of(copies.begin(), copies.end(), [](int n) { return n > 0; });
    return Variant{name, c};
  };
  using training::HeadKind;
  return {make("baseline", false, HeadKind::kManyToOne, {0, 0, 0, 0}),
          make("dfd", true, HeadKind::kManyToOne, {0, 0, 0, 0}),
          make("dfd_gi", true, HeadKind::kGradientInjection, {0, 0, 0, 0}),
          make("dfd_gi_jitter", true, HeadKind::kGradientInjection, {0, 0, 1, 0}),
          make("dfd_gi_affine", true, HeadKind::kGradientInjection, {0, 0, 0, 1})};
}

struct RunRow {
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  std::string error;  // empty = ok
  training::Metrics test;
  int best_epoch = -1;
};

std::string run_row_csv(const RunRow& r) {
  const bool ok = r.error.empty();
  std::string s = r.variant + "," + std::to_string(r.seed) + "," + (ok ? "ok" : "failed") + "," +
                  std::to_string(r.train_size) + ",";
  if (ok)
    s += std::to_string(r.best_epoch) + "," + num(r.test.top1) + "," + num(r.test.top3) + "," +
         num(r.test.macro_f1) + "," + num(r.test.top1_ci.lo) + "," + num(r.test.top1_ci.hi);
  else
    s += ",,,,,";
  return s + "," + csv_field(r.error) + "\n";
}

const char* kRunHeader =
    "variant,seed,status,train_size,best_epoch,test_top1,test_top3,test_macro_f1,ci_lo,ci_hi,"
    "error\n";

/// Aggregates per-seed rows of one variant: medians over successful seeds.
struct Aggregate {
  std::size_t ok = 0, failed = 0;
  double top1 = NAN, top3 = NAN, f1 = NAN;
};

Aggregate aggregate(const std::vector<RunRow>& rows, const std::string& variant) {
  Aggregate a;
  std::vector<double> t1, t3, f1;
  for (const auto& r : rows) {
    if (r.variant != variant) continue;
    if (!r.error.empty()) {
      ++a.failed;
      continue;
    }
    ++a.ok;
    t1.push_back(r.test.top1);
    t3.push_back(r.test.top3);
    f1.push_back(r.test.macro_f1);
  }
  if (a.ok > 0) {
    a.top1 = median(t1);
    a.top3 = median(t3);
    a.f1 = median(f1);
  }
  return a;
}

RunRow run_one(const std::string& name, RunConfig cfg, std::uint64_t seed,
               const std::function<PreparedData(const RunConfig&)>& prep, std::ostream& out) {
  RunRow row;
  row.variant = name;
  row.seed = seed;
  cfg.seed = seed;
  try {
    const PreparedData data = prep(cfg);
    row.train_size = data.train.size();
    const RunResult r = run_experiment(cfg, data);
    row.test = *r.report.test_metrics;
    row.best_epoch = r.report.best_epoch;
    out << name << " seed=" << seed << " train=" << row.train_size
        << " top1=" << row.test.top1 << " macro_f1=" << row.test.macro_f1 << "\n"
        << std::flush;
  } catch (const std::exception& e) {
    row.error = e.what();
    out << name << " seed=" << seed << " FAILED: " << e.what() << "\n" << std::flush;
  }
  return row;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& sets,
               const std::vector<std::uint64_t>& seeds_in, const std::vector<long long>& sizes,
               const std::string& out_dir, std::ostream& out) {
  RunConfig base = load_config(config_path, sets);
  if (!out_dir.empty()) base.output_dir = out_dir;
  const std::vector<std::uint64_t> seeds =
      seeds_in.empty() ? std::vector<std::uint64_t>{base.seed} : seeds_in;
  for (long long s : sizes)
    if (s < 0) throw ValidationError("--sizes entries must be >= 0");
  const auto variants = ablation_variants(base);
  for (const auto& v : variants) v.cfg.validate();

  std::vector<RunRow> rows;
  for (const auto& v : variants)
    for (std::uint64_t s : seeds)
      rows.push_back(run_one(v.name, v.cfg, s, prepare_data, out));

  std::string runs = kRunHeader;
  for (const auto& r : rows) runs += run_row_csv(r);
  std::string table =
      "variant,dfd,head,augment,seeds_ok,seeds_failed,median_top1,median_top3,"
      "median_macro_f1\n";
  for (const auto& v : variants) {
    const Aggregate a = aggregate(rows, v.name);
    const auto& c = v.cfg;
    std::string aug = "none";
    if (c.augment_enabled) {
      aug.clear();
      for (int m = 0; m < kNumAugmentModes; ++m)
        if (c.augment.copies[m] > 0)
          aug += (aug.empty() ? "" : "+") + std::string(augment_mode_name(AugmentMode(m))) + "x" +
                 std::to_string(c.augment.copies[m]);
    }
    table += v.name + "," + (c.dfd_enabled ? "on" : "off") + "," +
             (c.train.head == training::HeadKind::kGradientInjection ? "gi" : "many_to_one") +
             "," + aug + "," + std::to_string(a.ok) + "," + std::to_string(a.failed) + "," +
             (a.ok ? num(a.top1) + "," + num(a.top3) + "," + num(a.f1) : ",,") + "\n";
  }

  const fs::path dir(base.output_dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "ablation.csv", table);
  write_file_atomic(dir / "ablation_runs.csv", runs);
  write_file_atomic(dir / "config.resolved.json", dump(to_json(base)));

  if (!sizes.empty()) {
    // augment-size schedule on the DFD+GI variant: affine copies appended
    RunConfig sweep = variants[2].cfg;
    std::vector<RunRow> srows;
    for (long long extra : sizes) {
      const std::string name = "extra_" + std::to_string(extra);
      for (std::uint64_t s : seeds)
        srows.push_back(run_one(
            name, sweep, s,
            [extra](const RunConfig& c) {
              return augment_to(prepare_data(c), c, static_cast<std::size_t>(extra));
            },
            out));
    }
    std::string sruns = kRunHeader;
    for (const auto& r : srows) sruns += run_row_csv(r);
    std::string stable =
        "extra_samples,train_size,seeds_ok,seeds_failed,median_top1,top1_error,top3_error,"
        "median_macro_f1\n";
    for (long long extra : sizes) {
      const std::string name = "extra_" + std::to_string(extra);
      const Aggregate a = aggregate(srows, name);
      std::size_t size = 0;
      for (const auto& r : srows)
        if (r.variant == name) size = std::max(size, r.train_size);
      stable += std::to_string(extra) + "," + std::to_string(size) + "," + std::to_string(a.ok) +
                "," + std::to_string(a.failed) + "," +
                (a.ok ? num(a.top1) + "," + num(1.0 - a.top1) + "," + num(1.0 - a.top3) + "," +
                            num(a.f1)
                      : ",,,") +
                "\n";
    }
    write_file_atomic(dir / "augment_sizes.csv", stable);
    write_file_atomic(dir / "augment_sizes_runs.csv", sruns);
  }
  out << "wrote " << (dir / "ablation.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(double epsilon, std::uint64_t seed, bool corrupt, bool infer_bn,
                  double tolerance, const std::string& out_path, std::ostream& out) {
  if (!(epsilon > 0.0)) throw ValidationError("--epsilon must be > 0");
  if (!(tolerance > 0.0)) throw ValidationError("--tolerance must be > 0");
  training::ModelGradCheckOptions opt;
  opt.epsilon = epsilon;
  opt.seed = seed;
  opt.corrupt = corrupt;
  opt.train_mode = !infer_bn;
  const nn::GradCheckReport rep = training::grad_check_model(opt);

  char line[160];
  std::snprintf(line, sizeof line, "%-18s %8s %12s %12s  %s\n", "kind", "checked", "max_abs",
                "max_rel", "worst");
  out << line;
  json kinds = json::object();
  for (const auto& [kind, k] : rep.kinds) {
    std::snprintf(line, sizeof line, "%-18s %8zu %12.4e %12.4e  %s[%zu]\n", kind.c_str(),
                  k.checked, k.max_abs_error, k.max_rel_error, k.worst_param.c_str(),
                  k.worst_index);
    out << line;
    kinds[kind] = {{"checked", k.checked},
                   {"max_abs_error", k.max_abs_error},
                   {"max_rel_error", k.max_rel_error},
                   {"worst_param", k.worst_param},
                   {"worst_index", k.worst_index}};
  }
  const bool pass = rep.passed(tolerance);
  std::snprintf(line, sizeof line, "overall max_rel=%.4e tolerance=%.1e -> %s\n",
                rep.max_rel_error, tolerance, pass ? "PASS" : "FAIL");
  out << line;
  if (!out_path.empty())
    write_text(out_path, dump({{"epsilon", epsilon},
                               {"seed", seed},
                               {"corrupt", corrupt},
                               {"bn_mode", infer_bn ? "infer" : "train"},
                               {"tolerance", tolerance},
                               {"max_rel_error", rep.max_rel_error},
                               {"checked", rep.checked},
                               {"passed", pass},
                               {"kinds", kinds}}));
  return pass ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::string& csv_path, const std::string& out_path, std::ostream& out) {
  require_file(csv_path, "curves CSV");
  write_text(out_path, curves_svg(read_file(csv_path)));
  out << "wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string curves_svg(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,ce_loss,l2_loss,train_acc,val_acc", 0) != 0)
    throw ParseError("curves CSV: unexpected header");
  // columns: epoch, total loss, ce, train acc, val acc
  std::vector<std::array<double, 5>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string, 5> f;
    std::size_t col = 0, start = 0;
    for (std::size_t i = 0; i <= line.size() && col < 5; ++i)
      if (i == line.size() || line[i] == ',') {
        f[col++] = line.substr(start, i - start);
        start = i + 1;
      }
    if (col != 5) throw ParseError("curves CSV: expected 5 columns in '" + line + "'");
    auto parse = [&](const std::string& s) {
      if (s.empty()) return static_cast<double>(NAN);
      try {
        return std::stod(s);
      } catch (const std::exception&) {
        throw ParseError("curves CSV: bad number '" + s + "'");
      }
    };
    const double ce = parse(f[1]), l2 = parse(f[2]);
    rows.push_back({parse(f[0]), ce + l2, ce, parse(f[3]), parse(f[4])});
  }

  constexpr double W = 640, H = 240, L = 56, R = 16, T = 28, B = 32;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << 2 * H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double emax = 1;
  for (const auto& r : rows) emax = std::max(emax, r[0]);

  auto panel = [&](int idx, const char* title, std::vector<std::pair<int, const char*>> series,
                   const std::vector<const char*>& labels, bool unit_range) {
    const double y0 = idx * H;
    double lo = 0, hi = 1;
    if (!unit_range) {
      hi = 0;
      for (const auto& r : rows)
        for (const auto& [c, _] : series)
          if (std::isfinite(r[c])) hi = std::max(hi, r[c]);
      if (hi <= 0) hi = 1;
    }
    auto px = [&](double e) { return L + (W - L - R) * (e - 1) / std::max(1.0, emax - 1); };
    auto py = [&](double v) { return y0 + T + (H - T - B) * (1 - (v - lo) / (hi - lo)); };
    s << "<text x=\"" << L << "\" y=\"" << y0 + 18 << "\" font-size=\"13\">" << title
      << "</text>\n";
    s << "<rect x=\"" << L << "\" y=\"" << y0 + T << "\" width=\"" << W - L - R
      << "\" height=\"" << H - T - B << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = lo + (hi - lo) * k / 4.0;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3g", v);
      s << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << buf
        << "</text>\n";
    }
    s << "<text x=\"" << W - R << "\" y=\"" << y0 + H - 8 << "\" text-anchor=\"end\">epoch "
      << emax << "</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
    for (std::size_t i = 0; i < series.size(); ++i) {
      const int c = series[i].first;
      std::string pts;
      for (const auto& r : rows)
        if (std::isfinite(r[c])) pts += num(px(r[0])) + "," + num(py(r[c])) + " ";
      if (!pts.empty())
        s << "<polyline fill=\"none\" stroke=\"" << colors[i] << "\" stroke-width=\"1.5\" points=\""
          << pts << "\"/>\n";
      s << "<text x=\"" << L + 10 + 110 * i << "\" y=\"" << y0 + T + 14 << "\" fill=\""
        << colors[i] << "\">" << labels[i] << "</text>\n";
    }
  };
  panel(0, "Training loss", {{1, "total"}, {2, "ce"}}, {"ce + l2", "ce"}, false);
  panel(1, "Top-1 accuracy", {{3, "train"}, {4, "val"}}, {"train", "val"}, true);
  s << "</svg>\n";
  return s.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose-sequence action recognition toolkit"};
  app.require_subcommand(1);

  // ingest
  std::string in, labels, dest, stats, spec, config, ckpt, dataset, csv;
  std::vector<std::string> class_order, sets;
  double theta = 0.1, cutoff = 15.0;
  auto* ingest = app.add_subcommand("ingest", "keypoint exports + label manifest -> dataset");
  ingest->add_option("--in", in, "directory of per-clip keypoint export .json files")->required();
  ingest->add_option("--labels", labels, "manifest, one 'clip_id,class' per line")->required();
  ingest->add_option("--classes", class_order, "class order (default: sorted names)")
      ->delimiter(',');
  ingest->add_option("--theta", theta, "keypoint confidence threshold");
  ingest->add_option("--out", dest, "output dataset")->required();
  ingest->add_option("--csv", csv, "also write a per-frame CSV for inspection");

  auto* dfd = app.add_subcommand("dfd", "dynamic frame dropout over a dataset");
  dfd->add_option("--cutoff", cutoff, "pixel distance cutoff");
  dfd->add_option("--in", in, "input dataset")->required();
  dfd->add_option("--out", dest, "output dataset")->required();
  dfd->add_option("--stats", stats, "per-clip drop counts CSV");

  std::uint64_t seed = 1;
  unsigned workers = 1;
  auto* augment = app.add_subcommand("augment", "append augmented copies");
  augment->add_option("--in", in, "input dataset")->required();
  augment->add_option("--out", dest, "output dataset")->required();
  augment->add_option("--spec", spec, "augmentation spec JSON");
  augment->add_option("--seed", seed, "master seed");
  augment->add_option("--workers", workers, "threads (output does not depend on it)");

  SynthParams sp;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--classes", sp.n_classes, "number of classes");
  synth->add_option("--per-class", sp.n_per_class, "clips per class");
  synth->add_option("--seed", sp.seed, "seed");
  synth->add_option("--min-frames", sp.min_frames);
  synth->add_option("--max-frames", sp.max_frames);
  synth->add_option("--out", dest, "output dataset")->required();

  std::optional<std::uint64_t> train_seed;
  std::vector<int> layers;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train and evaluate per a run config");
  train->add_option("--config", config, "run config JSON")->required();
  train->add_option("--seed", train_seed, "override the config seed");
  train->add_option("--layers", layers, "BLSTM depth sweep, e.g. 3,5,7")->delimiter(',');
  train->add_option("--set", sets, "config override key.path=value (repeatable)");
  train->add_option("--out", dest, "output directory (overrides output.dir)");
  train->add_flag("--quiet", quiet, "no per-epoch lines");

  int trials = 50;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", ckpt)->required();
  eval->add_option("--dataset", dataset)->required();
  eval->add_option("--trials", trials, "bootstrap trials");
  eval->add_option("--seed", eval_seed, "bootstrap seed");
  eval->add_option("--out", dest, "metrics JSON");

  std::vector<std::uint64_t> seeds;
  std::vector<long long> sizes;
  auto* ablate = app.add_subcommand("ablate", "design-choice ablation over seeds");
  ablate->add_option("--config", config, "base run config JSON")->required();
  ablate->add_option("--seeds", seeds, "seed list, e.g. 1,2,3")->delimiter(',');
  ablate->add_option("--sizes", sizes, "extra augmented samples schedule")->delimiter(',');
  ablate->add_option("--set", sets, "config override key.path=value (repeatable)");
  ablate->add_option("--out", dest, "output directory");

  double epsilon = 1e-5, tolerance = 1e-4;
  std::uint64_t gc_seed = 0;
  bool corrupt = false, infer_bn = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the tiny model");
  gradcheck->add_option("--epsilon", epsilon);
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--tolerance", tolerance);
  gradcheck->add_flag("--corrupt", corrupt, "perturb one analytic gradient (must FAIL)");
  gradcheck->add_flag("--infer-bn", infer_bn, "batch norm on running statistics");
  gradcheck->add_option("--out", dest, "JSON error table");

  auto* report = app.add_subcommand("report", "SVG curves from a curves CSV");
  report->add_option("--csv", csv)->required();
  report->add_option("--out", dest, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(in, labels, class_order, theta, dest, csv, out, err);
    if (dfd->parsed()) return cmd_dfd(cutoff, in, dest, stats, out);
    if (augment->parsed()) return cmd_augment(in, dest, spec, seed, workers, out);
    if (synth->parsed()) return cmd_synth(sp, dest, out);
    if (train->parsed()) return cmd_train(config, sets, train_seed, layers, dest, quiet, out);
    if (eval->parsed()) return cmd_eval(ckpt, dataset, trials, eval_seed, dest, out);
    if (ablate->parsed()) return cmd_ablate(config, sets, seeds, sizes, dest, out);
    if (gradcheck->parsed())
      return cmd_gradcheck(epsilon, gc_seed, corrupt, infer_bn, tolerance, dest, out);
    if (report->parsed()) return cmd_report(csv, dest, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitValidation;
}

}  // namespace har::cli
