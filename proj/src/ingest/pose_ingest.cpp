// SPDX-License-Identifier: Apache-2.0
/**
 * @file   pose_ingest.cpp
 * @brief  Keypoint export parsing and preprocessing.
 */

#include <har/common.hpp>
#include <har/pose_ingest.hpp>

#include <cmath>
#include <json.hpp>
#include <sstream>

namespace har {

using nlohmann::json;

std::size_t PoseVector::valid_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

void PreprocessConfig::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw ParameterError("theta must lie in [0, 1], got " + std::to_string(theta));
}

namespace {

[[noreturn]] void fail(const std::string& clip_id, const std::string& where,
                       const std::string& what) {
  throw ParseError(clip_id + ": " + where + ": " + what);
}

double finite_number(const json& v, const std::string& clip_id,
                     const std::string& where) {
  if (!v.is_number()) fail(clip_id, where, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(clip_id, where, "non-finite value");
  return d;
}

}  // namespace

ParsedExport parse_keypoint_export(std::string_view document,
                                   const std::string& clip_id) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    // byte offset is the best location nlohmann gives; translate to a line
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < document.size(); ++i)
      if (document[i] == '\n') ++line;
    fail(clip_id, "line " + std::to_string(line), e.what());
  }
  if (!doc.is_array()) fail(clip_id, "document", "expected an array of frames");

  ParsedExport out;
  bool have_prev = false;
  std::uint32_t prev_index = 0;
  for (std::size_t f = 0; f < doc.size(); ++f) {
    const json& frame = doc[f];
    const std::string where = "frame #" + std::to_string(f);
    if (!frame.is_object()) fail(clip_id, where, "expected an object");
    if (!frame.contains("frame_index") || !frame["frame_index"].is_number_integer())
      fail(clip_id, where, "missing integer frame_index");
    const auto idx = frame["frame_index"].get<std::int64_t>();
    if (idx < 0) fail(clip_id, where, "negative frame_index");
    if (have_prev && static_cast<std::uint32_t>(idx) <= prev_index)
      fail(clip_id, where, "frame_index not strictly increasing");
    have_prev = true;
    prev_index = static_cast<std::uint32_t>(idx);

    if (!frame.contains("people") || !frame["people"].is_array())
      fail(clip_id, where, "missing people array");
    const json& people = frame["people"];
    if (people.empty()) {
      ++out.skipped_empty;
      continue;
    }
    if (people.size() > 1)
      throw ConstraintError(clip_id + ": frame_index " + std::to_string(idx) +
                            " contains " + std::to_string(people.size()) +
                            " people; at most one is allowed");
    const json& person = people[0];
    if (!person.is_object() || !person.contains("pose_keypoints_2d") ||
        !person["pose_keypoints_2d"].is_array())
      fail(clip_id, where, "person entry lacks pose_keypoints_2d");
    const json& kp = person["pose_keypoints_2d"];
    if (kp.size() != 3 * kNumKeypoints)
      fail(clip_id, where,
           "pose_keypoints_2d must hold 54 numbers, got " + std::to_string(kp.size()));

    RawPoseFrame raw;
    raw.frame_index = static_cast<std::uint32_t>(idx);
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      const std::string kw = where + " keypoint " + std::to_string(k);
      raw.keypoints[k].x = finite_number(kp[3 * k], clip_id, kw);
      raw.keypoints[k].y = finite_number(kp[3 * k + 1], clip_id, kw);
      const double c = finite_number(kp[3 * k + 2], clip_id, kw);
      if (c < 0.0 || c > 1.0) fail(clip_id, kw, "confidence outside [0, 1]");
      raw.keypoints[k].conf = c;
    }
    out.frames.push_back(raw);
  }
  return out;
}

PoseVector threshold_and_flatten(const RawPoseFrame& frame,
                                 const PreprocessConfig& cfg) {
  PoseVector v;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const auto& kp = frame.keypoints[k];
    if (kp.conf < cfg.theta) continue;  // stays zero, mask 0
    v.values[2 * k] = kp.x;
    v.values[2 * k + 1] = kp.y;
    v.mask[2 * k] = 1;
    v.mask[2 * k + 1] = 1;
  }
  return v;
}

PoseSequence build_sequence(std::vector<PoseVector> frames, int label,
                            std::string clip_id) {
  if (frames.empty())
    throw ConstraintError("clip '" + clip_id + "' has no frames with a person");
  PoseSequence seq;
  seq.frames = std::move(frames);
  seq.label = label;
  seq.clip_id = std::move(clip_id);
  return seq;
}

IngestResult ingest_clip(std::string_view document, const std::string& clip_id,
                         int label, const PreprocessConfig& cfg) {
  cfg.validate();
  auto parsed = parse_keypoint_export(document, clip_id);
  std::vector<PoseVector> vectors;
  vectors.reserve(parsed.frames.size());
  for (const auto& f : parsed.frames) vectors.push_back(threshold_and_flatten(f, cfg));
  return {build_sequence(std::move(vectors), label, clip_id), parsed.skipped_empty};
}

bool mask_consistent(const PoseVector& v) {
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    if (v.mask[2 * k] != v.mask[2 * k + 1]) return false;
  for (std::size_t j = 0; j < kPoseDim; ++j)
    if (!v.mask[j] && v.values[j] != 0.0) return false;
  return true;
}

}  // namespace har
