// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <har/common.hpp>
#include <har/pose_ingest.hpp>

#include "../support/test_support.hpp"

using namespace har;

TEST_CASE("parse: one person per frame transcribes every frame in order") {
  const auto out = parse_keypoint_export(test::make_export({1, 1, 1}), "c");
  REQUIRE(out.frames.size() == 3);
  CHECK(out.skipped_empty == 0);
  for (std::uint32_t f = 0; f < 3; ++f) {
    CHECK(out.frames[f].frame_index == f);
    CHECK(out.frames[f].keypoints[4].x == doctest::Approx(40.0 + f));
    CHECK(out.frames[f].keypoints[4].y == doctest::Approx(80.0 + f));
    CHECK(out.frames[f].keypoints[4].conf == doctest::Approx(0.9));
  }
}

TEST_CASE("parse: frames without a person are skipped and counted") {
  const auto out = parse_keypoint_export(test::make_export({1, 0, 1}), "c");
  REQUIRE(out.frames.size() == 2);
  CHECK(out.frames[0].frame_index == 0);
  CHECK(out.frames[1].frame_index == 2);
  CHECK(out.skipped_empty == 1);
}

TEST_CASE("parse: two people in a frame is a constraint error naming the frame") {
  try {
    parse_keypoint_export(test::make_export({1, 1, 2}), "clipA");
    FAIL("expected ConstraintError");
  } catch (const ConstraintError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("frame_index 2") != std::string::npos);
    CHECK(msg.find("clipA") != std::string::npos);
  }
}

TEST_CASE("parse: malformed documents raise ParseError with context") {
  SUBCASE("syntax error reports a line") {
    try {
      parse_keypoint_export("[\n{\"frame_index\": 0,\n \"people\": [}\n]", "c");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("wrong keypoint count") {
    CHECK_THROWS_AS(parse_keypoint_export(
                        R"([{"frame_index":0,"people":[{"pose_keypoints_2d":[1,2,0.5]}]}])", "c"),
                    ParseError);
  }
  SUBCASE("non-increasing frame_index") {
    CHECK_THROWS_AS(parse_keypoint_export(
                        R"([{"frame_index":3,"people":[]},{"frame_index":3,"people":[]}])", "c"),
                    ParseError);
  }
  SUBCASE("confidence outside [0, 1]") {
    auto doc = test::make_export({1}, [](std::size_t k) { return k == 3 ? 1.5 : 0.9; });
    CHECK_THROWS_AS(parse_keypoint_export(doc, "c"), ParseError);
  }
  SUBCASE("non-numeric coordinate") {
    std::string doc = R"([{"frame_index":0,"people":[{"pose_keypoints_2d":["a")";
    for (int i = 1; i < 54; ++i) doc += ",0";
    doc += "]}]}]";
    CHECK_THROWS_AS(parse_keypoint_export(doc, "c"), ParseError);
  }
  SUBCASE("top level is not an array") {
    CHECK_THROWS_AS(parse_keypoint_export("{}", "c"), ParseError);
  }
}

TEST_CASE("threshold_and_flatten: suppressed keypoints are zero and masked") {
  RawPoseFrame f;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) f.keypoints[k] = {100.0 + k, 200.0 + k, 0.9};
  f.keypoints[5].conf = 0.05;
  const PoseVector v = threshold_and_flatten(f, PreprocessConfig{0.1});
  CHECK(v.values[10] == 0.0);
  CHECK(v.values[11] == 0.0);
  CHECK(v.mask[10] == 0);
  CHECK(v.mask[11] == 0);
  CHECK(v.values[12] == 106.0);
  CHECK(v.mask[12] == 1);
  CHECK(v.valid_count() == 34);
  CHECK(mask_consistent(v));
}

TEST_CASE("threshold_and_flatten: identity flattening") {
  RawPoseFrame f;
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    f.keypoints[k] = {static_cast<double>(k), k + 0.5, 1.0};
  const PoseVector v = threshold_and_flatten(f, PreprocessConfig{});
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    CHECK(v.values[2 * k] == static_cast<double>(k));
    CHECK(v.values[2 * k + 1] == k + 0.5);
  }
  CHECK(v.valid_count() == kPoseDim);
}

TEST_CASE("threshold_and_flatten: theta 0 suppresses nothing") {
  RawPoseFrame f;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) f.keypoints[k] = {1.0, 2.0, 0.0};
  CHECK(threshold_and_flatten(f, PreprocessConfig{0.0}).valid_count() == kPoseDim);
}

TEST_CASE("threshold monotonicity and mask-zero coupling over random frames") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    RawPoseFrame f;
    for (auto& kp : f.keypoints) kp = {640 * u(rng), 480 * u(rng), u(rng)};
    std::size_t prev = kPoseDim + 1;
    for (double theta : {0.0, 0.1, 0.3, 0.5, 0.8, 1.0}) {
      const PoseVector v = threshold_and_flatten(f, PreprocessConfig{theta});
      CHECK(mask_consistent(v));
      CHECK(v.valid_count() <= prev);
      prev = v.valid_count();
    }
  }
}

TEST_CASE("PreprocessConfig rejects theta outside [0, 1]") {
  CHECK_THROWS_AS(PreprocessConfig{-0.1}.validate(), ParameterError);
  CHECK_THROWS_AS(PreprocessConfig{1.1}.validate(), ParameterError);
  CHECK_NOTHROW(PreprocessConfig{1.0}.validate());
}

TEST_CASE("build_sequence: counts and the empty-clip error") {
  CHECK(build_sequence(std::vector<PoseVector>(40), 2, "a").n_frame() == 40);
  const auto one = build_sequence(std::vector<PoseVector>(1), 0, "b");
  CHECK(one.n_frame() == 1);
  CHECK(one.clip_id == "b");
  CHECK_THROWS_AS(build_sequence({}, 0, "c"), ConstraintError);
}

TEST_CASE("ingest_clip: end to end on a document") {
  auto doc = test::make_export({1, 0, 1, 1}, [](std::size_t k) { return k < 2 ? 0.05 : 0.7; });
  const auto r = ingest_clip(doc, "clip", 1, PreprocessConfig{});
  CHECK(r.skipped_empty == 1);
  CHECK(r.sequence.n_frame() == 3);
  CHECK(r.sequence.label == 1);
  for (const auto& v : r.sequence.frames) {
    CHECK(v.valid_count() == kPoseDim - 4);
    CHECK(mask_consistent(v));
  }
  CHECK_THROWS_AS(ingest_clip(test::make_export({0, 0}), "e", 0, PreprocessConfig{}),
                  ConstraintError);
}
