#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "luna/trace_data.hpp"

namespace luna {

inline constexpr int kAdcBits = 14;
inline constexpr int kMaxFeatureWidth = 16;

/// Windowed shift-accumulate-shift reducer. Windows run from start_sample to
/// the end of the trace; tail samples that do not fill a window are dropped.
struct IntegratorConfig {
  std::size_t start_sample = 0;
  std::size_t num_windows = 1;
  int shift_m = 0;  // before accumulation
  int shift_n = 0;  // after accumulation

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

/// Words are ordered I then Q per window, window-major.
struct FeatureVector {
  std::vector<std::int32_t> words;
  int word_width = 1;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// floor((T - start) / num_windows). Throws ConfigError on an invalid config
/// or a zero-length window.
std::size_t window_length(const IntegratorConfig& cfg, std::size_t trace_length);

/// ceil(log2 n) for n >= 1.
int ceil_log2(std::size_t n);

/// Width of the adder-tree sum, before the post shift: 14 - shift_m + ceil(log2 L).
int tree_sum_width(const IntegratorConfig& cfg, std::size_t trace_length);

/// Feature word width: tree_sum_width - shift_n, clamped to [1, 16].
int feature_word_width(const IntegratorConfig& cfg, std::size_t trace_length);

/// Total flattened input bits: 2 * num_windows * word_width.
std::size_t feature_bits(const IntegratorConfig& cfg, std::size_t trace_length);

/// Throws FeatureOverflow if a window sum does not fit in the word width.
FeatureVector integrate(const TraceRecord& trace, const IntegratorConfig& cfg);

/// Adder-tree pipeline depth, ceil(log2 L). I and Q trees run in parallel.
int integrator_cycles(const IntegratorConfig& cfg, std::size_t trace_length);

/// Features for a subset of records, flattened row-major
/// (record, word). Throws FeatureOverflow on the first overflowing record.
struct FeatureSet {
  int word_width = 1;
  std::size_t words_per_vector = 0;
  std::vector<std::int32_t> words;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const std::int32_t> row(std::size_t k) const {
    return {words.data() + k * words_per_vector, words_per_vector};
  }
  FeatureVector vector(std::size_t k) const {
    auto r = row(k);
    return {{r.begin(), r.end()}, word_width};
  }
};

FeatureSet featurize(const Dataset& ds, std::span<const std::size_t> indices, const IntegratorConfig& cfg);

}  // namespace luna
