// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sequence_ops.hpp
 * @brief  Sequence-level transforms: dynamic frame dropout, per-sample
 *         consistent augmentation, synthetic data, and padded batching.
 */
#pragma once

#include <har/dataset.hpp>
#include <har/pose_ingest.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace har {

// ---------------------------------------------------------------------------
// Dynamic frame dropout

struct DfdConfig {
  double cutoff = 15.0;  // pixels

  void validate() const;
};

/// Euclidean distance over entries valid in both frames; +inf when the two
/// masks share no entry.
double frame_distance(const PoseVector& a, const PoseVector& b);

/// Indices kept by the scan: frame 0 always, then any frame whose distance to
/// the most recently kept frame is >= cutoff.
std::vector<std::size_t> dfd_kept_indices(const PoseSequence& seq,
                                          const DfdConfig& cfg);

PoseSequence dynamic_frame_dropout(const PoseSequence& seq, const DfdConfig& cfg);

// ---------------------------------------------------------------------------
// Augmentation. Every transform applies one parameter draw to all frames of
// a sample, so inter-frame motion of valid entries is preserved.

enum class AugmentMode : int { kTranslate = 0, kScale = 1, kNoise = 2, kAffine = 3 };
inline constexpr int kNumAugmentModes = 4;

const char* augment_mode_name(AugmentMode m);

struct AugmentSpec {
  double translate_range = 20.0;  // max |dx|, |dy| in pixels
  double scale_lo = 0.8;
  double scale_hi = 1.2;
  double noise_sigma = 2.0;  // pixels
  /// Copies per original for translate, scale, noise, affine (translate+scale).
  std::array<int, kNumAugmentModes> copies{};

  int copies_of(AugmentMode m) const { return copies[static_cast<int>(m)]; }
  int total_copies() const;
  void validate() const;
};

PoseSequence augment_translate(const PoseSequence& seq, double dx, double dy);

/// Scales every valid coordinate about the sequence's valid-coordinate
/// centroid. Throws ParameterError for s <= 0.
PoseSequence augment_scale(const PoseSequence& seq, double s);

/// Adds one N(0, sigma^2) offset vector, drawn once from `seed`, to the valid
/// entries of every frame.
PoseSequence augment_noise(const PoseSequence& seq, double sigma,
                           std::uint64_t seed);

/// A single augmented copy whose parameters come from `seed`.
PoseSequence augment_once(const PoseSequence& seq, AugmentMode mode,
                          const AugmentSpec& spec, std::uint64_t seed);

/// Seed for copy `copy` of original `index` under `mode`.
std::uint64_t augment_seed(std::uint64_t master_seed, std::size_t index,
                           AugmentMode mode, int copy);

/// Originals first (flagged original), then for each original in order, each
/// mode in order, each copy: one augmented sequence with the source label.
/// Results do not depend on `workers`.
Dataset augment_dataset(const Dataset& data, const AugmentSpec& spec,
                        std::uint64_t master_seed, unsigned workers = 1);

/// Appends exactly `extra` augmented sequences of one mode, cycling over the
/// originals round by round (round r uses copy index r).
Dataset augment_to_size(const Dataset& data, const AugmentSpec& spec,
                        AugmentMode mode, std::size_t extra,
                        std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Synthetic data

struct SynthParams {
  int n_per_class = 100;
  int n_classes = 3;
  int min_frames = 40;
  int max_frames = 70;
  double amplitude = 30.0;         // pixels, peak joint excursion
  double base_frequency = 0.06;    // cycles per frame
  double position_jitter = 20.0;   // +- pixels of subject placement
  double scale_jitter = 0.10;      // subject size in [1 - j, 1 + j]
  double keypoint_noise = 1.0;     // per-frame pixel noise
  double mask_fraction = 0.1;      // fraction of joints masked per clip
  std::uint64_t seed = 1;

  void validate() const;
};

/// Deterministic labeled dataset of parametric keypoint trajectories, one
/// motion family per class. Clip ids are "synth_<class>_<n>".
Dataset synth_generate(const SynthParams& params);

// ---------------------------------------------------------------------------
// Batching

struct Batch {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::vector<double> values;             // batch x max_len x 36
  std::vector<std::uint8_t> time_mask;    // batch x max_len
  std::vector<std::uint8_t> entry_mask;   // batch x max_len x 36
  std::vector<int> labels;
  std::vector<std::size_t> lengths;

  double value(std::size_t b, std::size_t t, std::size_t j) const {
    return values[(b * max_len + t) * kPoseDim + j];
  }
  bool valid(std::size_t b, std::size_t t) const {
    return time_mask[b * max_len + t] != 0;
  }
  bool entry_valid(std::size_t b, std::size_t t, std::size_t j) const {
    return entry_mask[(b * max_len + t) * kPoseDim + j] != 0;
  }
};

/// Pads the given sequences to their common max length.
Batch make_batch(std::span<const PoseSequence* const> seqs);

/// Groups sequences in order into batches of at most batch_size.
std::vector<Batch> pad_and_batch(std::span<const PoseSequence> seqs,
                                 std::size_t batch_size);

}  // namespace har
