// SPDX-License-Identifier: Apache-2.0
/**
 * @file   common.hpp
 * @brief  Error types and seed utilities shared by every module.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace har {

/// Malformed input document (keypoint export, dataset file, config).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is well-formed but violates a domain constraint (e.g. two people in a frame).
class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation parameter is out of its valid range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shape mismatch between tensors or layer dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN or Inf produced by a forward or backward computation.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or CLI argument validation failure.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SplitMix64 finalizer. Used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for stream (a, b, c) under a master seed. Distinct tuples give
/// unrelated seeds, unlike a plain XOR of the components.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
  return mix_seed(mix_seed(mix_seed(master ^ mix_seed(a)) ^ mix_seed(b + 1)) ^
                  mix_seed(c + 2));
}

}  // namespace har
