// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <har/cli/commands.hpp>
#include <har/cli/run_config.hpp>
#include <har/common.hpp>
#include <har/dataset.hpp>

#include "../support/test_support.hpp"

#include <filesystem>
#include <sstream>

using namespace har;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "har");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  write_file_atomic(p, s);
}

/// Small but complete run config over synthetic data.
std::string tiny_config(const fs::path& out_dir, const std::string& extra_augment = "") {
  return R"({
    "seed": 5,
    "data": {"synth": {"n_classes": 3, "n_per_class": 6, "min_frames": 12, "max_frames": 16}},
    "augment": {"translate_range": 20)" + extra_augment + R"(},
    "model": {"blstm_layers": 1, "hidden": 4, "dense_hidden": 4, "n_classes": 3, "gi_k": 2},
    "train": {"epochs": 2, "batch_size": 4},
    "output": {"dir": ")" + out_dir.string() + R"("}
  })";
}

}  // namespace

TEST_CASE("ingest builds a dataset from three exports") {
  const auto dir = test::temp_dir("cli_ingest");
  write(dir / "in" / "clip_a.json", test::make_export({1, 1, 0, 1}));
  write(dir / "in" / "clip_b.json", test::make_export({1, 1}));
  write(dir / "in" / "clip_c.json", test::make_export({0, 1, 1, 1, 1}));
  write(dir / "labels.csv", "clip_a,wave\nclip_b,clap\n# comment\nclip_c,wave\n");
  const auto r = run({"ingest", "--in", (dir / "in").string(), "--labels",
                      (dir / "labels.csv").string(), "--out", (dir / "d.bin").string(), "--csv",
                      (dir / "d.csv").string()});
  REQUIRE(r.code == 0);
  const std::string csv = read_file(dir / "d.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 + 2 + 4);
  CHECK(r.out.find("clip_a: frames=3 skipped_empty=1") != std::string::npos);
  CHECK(r.out.find("clip_c: frames=4 skipped_empty=1") != std::string::npos);
  const Dataset d = load_dataset(dir / "d.bin");
  REQUIRE(d.size() == 3);
  CHECK(d.class_names == std::vector<std::string>{"clap", "wave"});
  CHECK(d.sequences[0].clip_id == "clip_a");
  CHECK(d.sequences[0].label == 1);
  CHECK(d.sequences[1].label == 0);
  CHECK(d.sequences[2].n_frame() == 4);
}

TEST_CASE("ingest names the clip missing from the manifest") {
  const auto dir = test::temp_dir("cli_ingest_missing");
  write(dir / "in" / "clip_a.json", test::make_export({1, 1}));
  write(dir / "in" / "clip_zz.json", test::make_export({1, 1}));
  write(dir / "labels.csv", "clip_a,wave\n");
  const auto r = run({"ingest", "--in", (dir / "in").string(), "--labels",
                      (dir / "labels.csv").string(), "--out", (dir / "d.bin").string()});
  CHECK(r.code == cli::kExitValidation);
  CHECK(r.err.find("clip_zz") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "d.bin"));
}

TEST_CASE("ingest rejects a frame with two people") {
  const auto dir = test::temp_dir("cli_ingest_two");
  write(dir / "in" / "c.json", test::make_export({1, 2}));
  write(dir / "labels.csv", "c,x\n");
  const auto r = run({"ingest", "--in", (dir / "in").string(), "--labels",
                      (dir / "labels.csv").string(), "--out", (dir / "d.bin").string()});
  CHECK(r.code == cli::kExitValidation);
}

TEST_CASE("argument errors and help") {
  CHECK(run({}).code == cli::kExitValidation);
  CHECK(run({"frobnicate"}).code == cli::kExitValidation);
  CHECK(run({"synth"}).code == cli::kExitValidation);  // --out missing
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code_for(ValidationError("x")) == 1);
  CHECK(cli::exit_code_for(ParseError("x")) == 1);
  CHECK(cli::exit_code_for(ConstraintError("x")) == 1);
  CHECK(cli::exit_code_for(ParameterError("x")) == 1);
  CHECK(cli::exit_code_for(NumericalFault("x")) == 2);
  CHECK(cli::exit_code_for(ShapeError("x")) == 2);
  CHECK(cli::exit_code_for(std::runtime_error("x")) == 2);
}

TEST_CASE("run config is strict and round-trips") {
  using cli::run_config_from_json;
  CHECK_THROWS_AS(run_config_from_json({{"sed", 1}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"model", {{"hiden", 3}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"train", {{"apply_dfd", false}}}}), ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"augment", {{"copies", {{"rotate", 1}}}}}}),
                  ValidationError);
  CHECK_THROWS_AS(run_config_from_json({{"seed", "seven"}}), ValidationError);

  const auto c = run_config_from_json(
      nlohmann::json::parse(tiny_config("x", R"(, "enabled": true, "copies": {"noise": 2})")));
  CHECK(c.augment_enabled);
  CHECK(c.augment.copies[2] == 2);
  const auto j = cli::to_json(c);
  CHECK(cli::to_json(run_config_from_json(j)) == j);
  CHECK_NOTHROW(c.validate());

  auto bad = c;
  bad.data.synth.reset();  // neither dataset nor synth
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = c;
  bad.data.synth->n_classes = 4;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = c;
  bad.precision = "half";
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("train with a missing dataset fails before writing anything") {
  const auto dir = test::temp_dir("cli_train_missing");
  write(dir / "run.json", R"({"data": {"dataset": ")" + (dir / "nope.bin").string() +
                              R"("}, "output": {"dir": ")" + (dir / "out").string() + R"("}})");
  const auto r = run({"train", "--config", (dir / "run.json").string()});
  CHECK(r.code == cli::kExitValidation);
  CHECK(r.err.find("nope.bin") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("train is reproducible and its checkpoint evaluates") {
  const auto dir = test::temp_dir("cli_train");
  write(dir / "run.json", tiny_config(dir / "unused"));
  for (const char* sub : {"a", "b"}) {
    const auto r = run({"train", "--config", (dir / "run.json").string(), "--seed", "7", "--out",
                        (dir / sub).string(), "--quiet"});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"report.json", "checkpoint.ckpt", "curves.csv"})
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  CHECK(fs::exists(dir / "a" / "config.resolved.json"));
  CHECK(fs::exists(dir / "a" / "timing.json"));
  const auto report = nlohmann::json::parse(read_file(dir / "a" / "report.json"));
  CHECK(report.at("seed") == 7);
  CHECK(report.at("test_metrics").at("n") == 6);

  // a different seed changes the outcome
  REQUIRE(run({"train", "--config", (dir / "run.json").string(), "--seed", "8", "--out",
               (dir / "c").string(), "--quiet"})
              .code == 0);
  CHECK(read_file(dir / "a" / "checkpoint.ckpt") != read_file(dir / "c" / "checkpoint.ckpt"));

  REQUIRE(run({"synth", "--per-class", "4", "--seed", "3", "--out", (dir / "t.bin").string()})
              .code == 0);
  const auto e = run({"eval", "--checkpoint", (dir / "a" / "checkpoint.ckpt").string(),
                      "--dataset", (dir / "t.bin").string(), "--out",
                      (dir / "eval.json").string()});
  CHECK(e.code == 0);
  const auto ev = nlohmann::json::parse(read_file(dir / "eval.json"));
  CHECK(ev.at("metrics").at("n") == 12);

  const auto rep = run({"report", "--csv", (dir / "a" / "curves.csv").string(), "--out",
                        (dir / "curves.svg").string()});
  CHECK(rep.code == 0);
  const std::string svg = read_file(dir / "curves.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("train --layers writes one report per depth") {
  const auto dir = test::temp_dir("cli_layers");
  write(dir / "run.json", tiny_config(dir / "out"));
  const auto r = run({"train", "--config", (dir / "run.json").string(), "--layers", "1,2",
                      "--set", "train.epochs=1", "--quiet"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "out" / "layers_1" / "report.json"));
  CHECK(fs::exists(dir / "out" / "layers_2" / "report.json"));
  const std::string summary = read_file(dir / "out" / "depth_summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
  const auto rep = nlohmann::json::parse(read_file(dir / "out" / "layers_2" / "report.json"));
  CHECK(rep.at("config").at("model").at("blstm_layers") == 2);
  CHECK(rep.at("epochs").size() == 1);
}

TEST_CASE("ablate emits five variants and records failures") {
  const auto dir = test::temp_dir("cli_ablate");
  // an absurd translation overflows only the augmented variants
  write(dir / "run.json", tiny_config(dir / "out"));
  auto r = run({"ablate", "--config", (dir / "run.json").string(), "--seeds", "1,2", "--set",
                "augment.translate_range=1e308", "--set", "train.epochs=1"});
  REQUIRE(r.code == 0);
  const std::string table = read_file(dir / "out" / "ablation.csv");
  std::istringstream in(table);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 6);
  CHECK(lines[1].rfind("baseline,off,many_to_one,none,2,0,", 0) == 0);
  CHECK(lines[2].rfind("dfd,on,many_to_one,none,2,0,", 0) == 0);
  CHECK(lines[3].rfind("dfd_gi,on,gi,none,2,0,", 0) == 0);
  CHECK(lines[4].rfind("dfd_gi_jitter,on,gi,noisex1,", 0) == 0);
  CHECK(lines[5] == "dfd_gi_affine,on,gi,affinex1,0,2,,,");
  const std::string runs = read_file(dir / "out" / "ablation_runs.csv");
  CHECK(std::count(runs.begin(), runs.end(), '\n') == 11);

  r = run({"ablate", "--config", (dir / "run.json").string(), "--seeds", "1", "--sizes", "0,5",
           "--set", "train.epochs=1", "--out", (dir / "sizes").string()});
  REQUIRE(r.code == 0);
  const std::string sizes = read_file(dir / "sizes" / "augment_sizes.csv");
  CHECK(sizes.find("\n0,") != std::string::npos);
  CHECK(sizes.find("\n5,") != std::string::npos);
}

TEST_CASE("dfd command reports per-clip drops") {
  const auto dir = test::temp_dir("cli_dfd");
  REQUIRE(run({"synth", "--per-class", "3", "--out", (dir / "d.bin").string()}).code == 0);
  const auto r = run({"dfd", "--cutoff", "15", "--in", (dir / "d.bin").string(), "--out",
                      (dir / "dd.bin").string(), "--stats", (dir / "s.csv").string()});
  REQUIRE(r.code == 0);
  const Dataset in = load_dataset(dir / "d.bin");
  std::string expect = "clip_id,frames_in,frames_out,dropped\n";
  for (const auto& s : in.sequences) {
    const std::size_t kept = test::dfd_oracle(s, 15.0).size();
    expect += s.clip_id + "," + std::to_string(s.n_frame()) + "," + std::to_string(kept) + "," +
              std::to_string(s.n_frame() - kept) + "\n";
  }
  CHECK(read_file(dir / "s.csv") == expect);
  CHECK(load_dataset(dir / "d.bin") == in);  // input untouched
  CHECK(run({"dfd", "--cutoff", "-1", "--in", (dir / "d.bin").string(), "--out",
             (dir / "x.bin").string()})
            .code == cli::kExitValidation);
}

TEST_CASE("augment output does not depend on worker count") {
  const auto dir = test::temp_dir("cli_aug");
  REQUIRE(run({"synth", "--per-class", "3", "--out", (dir / "d.bin").string()}).code == 0);
  write(dir / "spec.json", R"({"copies": {"translate": 1, "affine": 2}})");
  for (const char* w : {"1", "3"})
    REQUIRE(run({"augment", "--in", (dir / "d.bin").string(), "--out",
                 (dir / ("a" + std::string(w) + ".bin")).string(), "--spec",
                 (dir / "spec.json").string(), "--seed", "4", "--workers", w})
                .code == 0);
  CHECK(read_file(dir / "a1.bin") == read_file(dir / "a3.bin"));
  CHECK(load_dataset(dir / "a1.bin").size() == 9 * 4);
}

TEST_CASE("gradcheck passes, is reproducible, and fails when corrupted") {
  const auto a = run({"gradcheck", "--epsilon", "1e-5", "--seed", "3"});
  const auto b = run({"gradcheck", "--epsilon", "1e-5", "--seed", "3"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("PASS") != std::string::npos);
  const auto c = run({"gradcheck", "--corrupt"});
  CHECK(c.code == cli::kExitRuntime);
  CHECK(c.out.find("FAIL") != std::string::npos);
}

TEST_CASE("curves_svg rejects a foreign CSV") {
  CHECK_THROWS_AS(cli::curves_svg("a,b\n1,2\n"), ParseError);
  const std::string svg = cli::curves_svg("epoch,ce_loss,l2_loss,train_acc,val_acc\n0,1,0.1,,0.5\n");
  CHECK(svg.find("</svg>") != std::string::npos);
}
