// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synth.cpp
 * @brief  Parametric keypoint trajectories used as a desk-scale stand-in for
 *         extracted video poses.
 *
 * Each class animates a fixed 18-joint standing template with one motion
 * family. Per-sample jitter covers placement, subject size, phase, speed and
 * amplitude; a per-frame Gaussian models extractor noise.
 */

#include <har/common.hpp>
#include <har/sequence_ops.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace har {

namespace {

struct Point {
  double x, y;
};

// Joint order: nose, neck, r-shoulder, r-elbow, r-wrist, l-shoulder, l-elbow,
// l-wrist, r-hip, r-knee, r-ankle, l-hip, l-knee, l-ankle, r-eye, l-eye,
// r-ear, l-ear. Body frame in pixels, y pointing down, hips at the origin.
constexpr std::array<Point, kNumKeypoints> kTemplate = {{
    {0, -85}, {0, -65}, {-20, -65}, {-28, -35}, {-32, -8}, {20, -65},
    {28, -35}, {32, -8}, {-12, 0}, {-13, 45}, {-14, 90}, {12, 0},
    {13, 45}, {14, 90}, {-5, -90}, {5, -90}, {-10, -88}, {10, -88},
}};

enum Joint {
  kNose, kNeck, kRSho, kRElb, kRWri, kLSho, kLElb, kLWri, kRHip, kRKnee,
  kRAnk, kLHip, kLKnee, kLAnk, kREye, kLEye, kREar, kLEar
};

constexpr int kFamilies = 6;

// Displacement of every joint at phase `ph` (radians) with amplitude `a`.
void animate(int family, double ph, double a, std::array<Point, kNumKeypoints>& p) {
  const double s = std::sin(ph), c = std::cos(ph);
  switch (family) {
    case 0:  // right-arm wave
      p[kRWri].x += 0.6 * a * s;
      p[kRWri].y += -a * (0.5 + 0.5 * c);
      p[kRElb].x += 0.3 * a * s;
      p[kRElb].y += -0.5 * a * (0.5 + 0.5 * c);
      break;
    case 1:  // walk in place: legs alternate, arms counter-swing
      p[kRAnk].x += a * s;
      p[kLAnk].x -= a * s;
      p[kRKnee].x += 0.5 * a * s;
      p[kLKnee].x -= 0.5 * a * s;
      p[kRWri].x -= 0.4 * a * s;
      p[kLWri].x += 0.4 * a * s;
      break;
    case 2: {  // squat: upper body drops, knees spread
      const double drop = a * (0.5 - 0.5 * c);
      for (int j : {kNose, kNeck, kRSho, kRElb, kRWri, kLSho, kLElb, kLWri, kRHip,
                    kLHip, kREye, kLEye, kREar, kLEar})
        p[j].y += drop;
      p[kRKnee].x -= 0.5 * drop;
      p[kLKnee].x += 0.5 * drop;
      p[kRKnee].y += 0.5 * drop;
      p[kLKnee].y += 0.5 * drop;
      break;
    }
    case 3:  // clap: both wrists meet in front of the chest
      p[kRWri].x += 0.8 * a * (0.5 - 0.5 * c);
      p[kLWri].x -= 0.8 * a * (0.5 - 0.5 * c);
      p[kRWri].y -= 0.8 * a;
      p[kLWri].y -= 0.8 * a;
      p[kRElb].x += 0.3 * a * (0.5 - 0.5 * c);
      p[kLElb].x -= 0.3 * a * (0.5 - 0.5 * c);
      break;
    case 4:  // left-arm circle
      p[kLWri].x += a * c;
      p[kLWri].y += a * s;
      p[kLElb].x += 0.4 * a * c;
      p[kLElb].y += 0.4 * a * s;
      break;
    default:  // side bend: torso sways
      for (int j : {kNose, kNeck, kREye, kLEye, kREar, kLEar}) p[j].x += a * s;
      for (int j : {kRSho, kLSho, kRElb, kLElb, kRWri, kLWri}) p[j].x += 0.7 * a * s;
      break;
  }
}

}  // namespace

void SynthParams::validate() const {
  if (n_classes < 2) throw ParameterError("synthetic data needs at least 2 classes");
  if (n_per_class < 0) throw ParameterError("n_per_class must be >= 0");
  if (min_frames < 1 || max_frames < min_frames)
    throw ParameterError("frame range must satisfy 1 <= min <= max");
  if (!(mask_fraction >= 0.0 && mask_fraction <= 1.0))
    throw ParameterError("mask_fraction must lie in [0, 1]");
  if (!(amplitude >= 0.0) || !(base_frequency > 0.0) || !(position_jitter >= 0.0) ||
      !(scale_jitter >= 0.0 && scale_jitter < 1.0) || !(keypoint_noise >= 0.0))
    throw ParameterError("invalid synthetic motion parameters");
}

Dataset synth_generate(const SynthParams& params) {
  params.validate();
  Dataset data;
  for (int c = 0; c < params.n_classes; ++c)
    data.class_names.push_back("motion_" + std::to_string(c));

  const double two_pi = 2.0 * std::numbers::pi;
  for (int c = 0; c < params.n_classes; ++c) {
    const int family = c % kFamilies;
    // classes beyond the base families reuse a motion at a different tempo
    const double tempo = 1.0 + 0.6 * (c / kFamilies);
    for (int n = 0; n < params.n_per_class; ++n) {
      std::mt19937_64 rng(derive_seed(params.seed, static_cast<std::uint64_t>(c),
                                      static_cast<std::uint64_t>(n)));
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

      const int len = std::uniform_int_distribution<int>(params.min_frames,
                                                         params.max_frames)(rng);
      const double cx = 320.0 + uniform(-params.position_jitter, params.position_jitter);
      const double cy = 240.0 + uniform(-params.position_jitter, params.position_jitter);
      const double size = 1.0 + uniform(-params.scale_jitter, params.scale_jitter);
      const double phase0 = uniform(0.0, two_pi);
      const double freq = params.base_frequency * tempo * uniform(0.85, 1.15);
      const double amp = params.amplitude * uniform(0.8, 1.2);

      std::array<int, kNumKeypoints> order{};
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      const auto n_masked = static_cast<std::size_t>(
          std::lround(params.mask_fraction * static_cast<double>(kNumKeypoints)));
      std::array<bool, kNumKeypoints> masked{};
      for (std::size_t i = 0; i < n_masked; ++i) masked[order[i]] = true;

      std::normal_distribution<double> jitter(0.0, 1.0);
      std::vector<PoseVector> frames;
      frames.reserve(len);
      for (int t = 0; t < len; ++t) {
        auto pose = kTemplate;
        animate(family, phase0 + two_pi * freq * t, amp, pose);
        PoseVector v;
        for (std::size_t k = 0; k < kNumKeypoints; ++k) {
          const double nx = params.keypoint_noise * jitter(rng);
          const double ny = params.keypoint_noise * jitter(rng);
          if (masked[k]) continue;
          v.values[2 * k] = cx + size * pose[k].x + nx;
          v.values[2 * k + 1] = cy + size * pose[k].y + ny;
          v.mask[2 * k] = v.mask[2 * k + 1] = 1;
        }
        frames.push_back(v);
      }
      data.add(build_sequence(std::move(frames), c,
                              "synth_" + std::to_string(c) + "_" + std::to_string(n)));
    }
  }
  return data;
}

}  // namespace har
