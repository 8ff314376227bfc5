// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sequence_ops.cpp
 * @brief  Frame dropout, augmentation and batching.
 */

#include <har/common.hpp>
#include <har/sequence_ops.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace har {

void DfdConfig::validate() const {
  if (!(cutoff >= 0.0)) throw ParameterError("DFD cutoff must be >= 0");
}

double frame_distance(const PoseVector& a, const PoseVector& b) {
  double sum = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < kPoseDim; ++j) {
    if (!(a.mask[j] && b.mask[j])) continue;
    const double d = a.values[j] - b.values[j];
    sum += d * d;
    any = true;
  }
  return any ? std::sqrt(sum) : std::numeric_limits<double>::infinity();
}

std::vector<std::size_t> dfd_kept_indices(const PoseSequence& seq,
                                          const DfdConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> kept;
  if (seq.frames.empty()) return kept;
  kept.push_back(0);
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    if (frame_distance(seq.frames[kept.back()], seq.frames[t]) >= cfg.cutoff)
      kept.push_back(t);
  }
  return kept;
}

PoseSequence dynamic_frame_dropout(const PoseSequence& seq, const DfdConfig& cfg) {
  PoseSequence out;
  out.label = seq.label;
  out.clip_id = seq.clip_id;
  for (auto t : dfd_kept_indices(seq, cfg)) out.frames.push_back(seq.frames[t]);
  return out;
}

// ---------------------------------------------------------------------------

const char* augment_mode_name(AugmentMode m) {
  switch (m) {
    case AugmentMode::kTranslate: return "translate";
    case AugmentMode::kScale: return "scale";
    case AugmentMode::kNoise: return "noise";
    case AugmentMode::kAffine: return "affine";
  }
  return "?";
}

int AugmentSpec::total_copies() const {
  int n = 0;
  for (int c : copies) n += c;
  return n;
}

void AugmentSpec::validate() const {
  if (!(translate_range >= 0.0) || !std::isfinite(translate_range))
    throw ParameterError("translate_range must be a finite value >= 0");
  if (!(scale_lo > 0.0) || !(scale_hi >= scale_lo) || !std::isfinite(scale_hi))
    throw ParameterError("scale range must satisfy 0 < lo <= hi");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw ParameterError("noise_sigma must be a finite value >= 0");
  for (int c : copies)
    if (c < 0) throw ParameterError("augmentation copy counts must be >= 0");
}

PoseSequence augment_translate(const PoseSequence& seq, double dx, double dy) {
  if (!std::isfinite(dx) || !std::isfinite(dy))
    throw ParameterError("translation offsets must be finite");
  PoseSequence out = seq;
  for (auto& f : out.frames)
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (!f.mask[2 * k]) continue;
      f.values[2 * k] += dx;
      f.values[2 * k + 1] += dy;
    }
  return out;
}

PoseSequence augment_scale(const PoseSequence& seq, double s) {
  if (!(s > 0.0) || !std::isfinite(s))
    throw ParameterError("scale factor must be positive and finite");
  if (s == 1.0) return seq;  // c + 1 * (p - c) is not always bit-exact
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const auto& f : seq.frames)
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (!f.mask[2 * k]) continue;
      sx += f.values[2 * k];
      sy += f.values[2 * k + 1];
      ++n;
    }
  PoseSequence out = seq;
  if (n == 0) return out;
  const double cx = sx / static_cast<double>(n);
  const double cy = sy / static_cast<double>(n);
  for (auto& f : out.frames)
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (!f.mask[2 * k]) continue;
      f.values[2 * k] = cx + s * (f.values[2 * k] - cx);
      f.values[2 * k + 1] = cy + s * (f.values[2 * k + 1] - cy);
    }
  return out;
}

PoseSequence augment_noise(const PoseSequence& seq, double sigma,
                           std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ParameterError("noise sigma must be finite and >= 0");
  std::array<double, kPoseDim> offset{};
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& o : offset) o = normal(rng);
  }
  PoseSequence out = seq;
  for (auto& f : out.frames)
    for (std::size_t j = 0; j < kPoseDim; ++j)
      if (f.mask[j]) f.values[j] += offset[j];
  return out;
}

PoseSequence augment_once(const PoseSequence& seq, AugmentMode mode,
                          const AugmentSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const double r = spec.translate_range;
  switch (mode) {
    case AugmentMode::kTranslate: {
      const double dx = uniform(-r, r);
      const double dy = uniform(-r, r);
      return augment_translate(seq, dx, dy);
    }
    case AugmentMode::kScale:
      return augment_scale(seq, uniform(spec.scale_lo, spec.scale_hi));
    case AugmentMode::kNoise:
      return augment_noise(seq, spec.noise_sigma, rng());
    case AugmentMode::kAffine: {
      const double dx = uniform(-r, r);
      const double dy = uniform(-r, r);
      const double s = uniform(spec.scale_lo, spec.scale_hi);
      return augment_translate(augment_scale(seq, s), dx, dy);
    }
  }
  throw ParameterError("unknown augmentation mode");
}

std::uint64_t augment_seed(std::uint64_t master_seed, std::size_t index,
                           AugmentMode mode, int copy) {
  return derive_seed(master_seed, index, static_cast<std::uint64_t>(mode),
                     static_cast<std::uint64_t>(copy));
}

namespace {

PoseSequence make_copy(const PoseSequence& src, std::size_t index, AugmentMode mode,
                       int copy, const AugmentSpec& spec, std::uint64_t master_seed) {
  PoseSequence out =
      augment_once(src, mode, spec, augment_seed(master_seed, index, mode, copy));
  out.clip_id = src.clip_id + "#" + augment_mode_name(mode) + std::to_string(copy);
  out.label = src.label;
  return out;
}

}  // namespace

Dataset augment_dataset(const Dataset& data, const AugmentSpec& spec,
                        std::uint64_t master_seed, unsigned workers) {
  spec.validate();
  const std::size_t n = data.size();
  std::vector<std::vector<PoseSequence>> per_source(n);

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) {
      if (data.provenance[i] != Provenance::kOriginal) continue;
      auto& bucket = per_source[i];
      for (int m = 0; m < kNumAugmentModes; ++m) {
        const auto mode = static_cast<AugmentMode>(m);
        for (int c = 0; c < spec.copies[m]; ++c)
          bucket.push_back(make_copy(data.sequences[i], i, mode, c, spec, master_seed));
      }
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }

  Dataset out = data;
  for (auto& bucket : per_source)
    for (auto& s : bucket) out.add(std::move(s), Provenance::kAugmented);
  return out;
}

Dataset augment_to_size(const Dataset& data, const AugmentSpec& spec,
                        AugmentMode mode, std::size_t extra,
                        std::uint64_t master_seed) {
  spec.validate();
  std::vector<std::size_t> originals;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.provenance[i] == Provenance::kOriginal) originals.push_back(i);
  Dataset out = data;
  if (extra == 0) return out;
  if (originals.empty())
    throw ParameterError("cannot augment a dataset without original sequences");
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t i = originals[k % originals.size()];
    const int round = static_cast<int>(k / originals.size());
    out.add(make_copy(data.sequences[i], i, mode, round, spec, master_seed),
            Provenance::kAugmented);
  }
  return out;
}

// ---------------------------------------------------------------------------

Batch make_batch(std::span<const PoseSequence* const> seqs) {
  Batch b;
  b.batch = seqs.size();
  for (const auto* s : seqs) b.max_len = std::max(b.max_len, s->frames.size());
  b.values.assign(b.batch * b.max_len * kPoseDim, 0.0);
  b.time_mask.assign(b.batch * b.max_len, 0);
  b.entry_mask.assign(b.batch * b.max_len * kPoseDim, 0);
  for (std::size_t i = 0; i < b.batch; ++i) {
    const auto& s = *seqs[i];
    b.labels.push_back(s.label);
    b.lengths.push_back(s.frames.size());
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
      b.time_mask[i * b.max_len + t] = 1;
      const std::size_t base = (i * b.max_len + t) * kPoseDim;
      for (std::size_t j = 0; j < kPoseDim; ++j) {
        b.values[base + j] = s.frames[t].values[j];
        b.entry_mask[base + j] = s.frames[t].mask[j];
      }
    }
  }
  return b;
}

std::vector<Batch> pad_and_batch(std::span<const PoseSequence> seqs,
                                 std::size_t batch_size) {
  if (batch_size == 0) throw ParameterError("batch_size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < seqs.size(); start += batch_size) {
    const std::size_t end = std::min(seqs.size(), start + batch_size);
    std::vector<const PoseSequence*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&seqs[i]);
    out.push_back(make_batch(ptrs));
  }
  return out;
}

}  // namespace har
