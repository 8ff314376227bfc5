// SPDX-License-Identifier: Apache-2.0
/**
 * @file   pose_ingest.hpp
 * @brief  Keypoint export parsing and confidence-masked pose flattening.
 *
 * A clip arrives as one JSON document with per-frame detections from an
 * 18-keypoint 2D pose extractor. Each frame is reduced to a 36-entry pose
 * vector (x, y interleaved per keypoint). Keypoints whose confidence falls
 * below the threshold are zeroed and masked out; confidences are dropped.
 */
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace har {

inline constexpr std::size_t kNumKeypoints = 18;
inline constexpr std::size_t kPoseDim = 2 * kNumKeypoints;

struct RawKeypoint {
  double x = 0.0;
  double y = 0.0;
  double conf = 0.0;
};

struct RawPoseFrame {
  std::array<RawKeypoint, kNumKeypoints> keypoints{};
  std::uint32_t frame_index = 0;
};

/// One flattened frame. mask[j] == 0 implies values[j] == 0, and both
/// coordinates of a keypoint share a mask bit.
struct PoseVector {
  std::array<double, kPoseDim> values{};
  std::array<std::uint8_t, kPoseDim> mask{};

  std::size_t valid_count() const;
  bool operator==(const PoseVector&) const = default;
};

struct PoseSequence {
  std::vector<PoseVector> frames;
  int label = 0;
  std::string clip_id;

  std::size_t n_frame() const { return frames.size(); }
  bool operator==(const PoseSequence&) const = default;
};

struct PreprocessConfig {
  double theta = 0.1;

  void validate() const;
};

struct ParsedExport {
  std::vector<RawPoseFrame> frames;
  std::size_t skipped_empty = 0;
};

/// Parses a keypoint export document (JSON array of frames). Frames without a
/// person are skipped and counted. Throws ParseError on malformed input and
/// ConstraintError when a frame lists more than one person.
ParsedExport parse_keypoint_export(std::string_view document,
                                   const std::string& clip_id);

PoseVector threshold_and_flatten(const RawPoseFrame& frame,
                                 const PreprocessConfig& cfg);

/// Throws ConstraintError on an empty frame list.
PoseSequence build_sequence(std::vector<PoseVector> frames, int label,
                            std::string clip_id);

/// Full per-clip path: parse, threshold, flatten, assemble.
struct IngestResult {
  PoseSequence sequence;
  std::size_t skipped_empty = 0;
};
IngestResult ingest_clip(std::string_view document, const std::string& clip_id,
                         int label, const PreprocessConfig& cfg);

/// True iff every masked entry holds 0 and keypoint pairs share a mask bit.
bool mask_consistent(const PoseVector& v);

}  // namespace har
