#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>

namespace luna {

/// Seeded generator with platform-independent distributions.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the
/// standard); the standard distributions are implementation-defined, so the
/// uniform/normal draws are computed here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). n must be non-zero.
  std::uint64_t below(std::uint64_t n);

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed from a master seed and a path of integers, e.g.
/// (master, generation, slot). Order-sensitive.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace luna
