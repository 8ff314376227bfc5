// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dataset.hpp
 * @brief  Labeled collection of pose sequences and its on-disk formats.
 *
 * Binary dataset layout (all integers little-endian):
 *
 *   magic "HARSEQ\0\0" | u32 version | u32 pose_dim (36) | u32 n_classes
 *   n_classes x string                                  (u32 length + bytes)
 *   u32 n_clips
 *   per clip: string clip_id | u32 label | u8 provenance | u32 n_frame
 *             f64 values[n_frame * 36]                  (row-major)
 *             u8 mask_bits[ceil(n_frame * 36 / 8)]      (LSB first)
 */
#pragma once

#include <har/pose_ingest.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace har {

enum class Provenance : std::uint8_t { kOriginal = 0, kAugmented = 1 };

struct Dataset {
  std::vector<PoseSequence> sequences;
  std::vector<std::string> class_names;
  std::vector<Provenance> provenance;  // parallel to sequences

  std::size_t size() const { return sequences.size(); }
  std::size_t n_classes() const { return class_names.size(); }

  void add(PoseSequence seq, Provenance p = Provenance::kOriginal);

  /// Throws ValidationError if labels, provenance, or class count are invalid.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

void write_dataset(std::ostream& os, const Dataset& data);
Dataset read_dataset(std::istream& is);

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

/// One row per frame: clip_id,label,provenance,frame,v0..v35,m0..m35.
void write_dataset_csv(std::ostream& os, const Dataset& data);

/// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace har
