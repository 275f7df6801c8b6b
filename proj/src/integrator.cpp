#include "luna/integrator.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "luna/error.hpp"

namespace luna {

namespace {

void check_config(const IntegratorConfig& cfg, std::size_t trace_length) {
  if (cfg.start_sample >= trace_length)
    throw ConfigError("start_sample " + std::to_string(cfg.start_sample) + " not below T=" +
                      std::to_string(trace_length));
  if (cfg.num_windows < 1) throw ConfigError("num_windows must be at least 1");
  if (cfg.shift_m < 0 || cfg.shift_n < 0) throw ConfigError("shifts must be non-negative");
  if (cfg.shift_m >= kAdcBits) throw ConfigError("shift_m must be below 14");
  if (cfg.shift_n > 32) throw ConfigError("shift_n must be at most 32");
}

}  // namespace

std::size_t window_length(const IntegratorConfig& cfg, std::size_t trace_length) {
  check_config(cfg, trace_length);
  const std::size_t len = (trace_length - cfg.start_sample) / cfg.num_windows;
  if (len == 0) throw ConfigError("window length is zero");
  return len;
}

int ceil_log2(std::size_t n) { return n <= 1 ? 0 : static_cast<int>(std::bit_width(n - 1)); }

int tree_sum_width(const IntegratorConfig& cfg, std::size_t trace_length) {
  return kAdcBits - cfg.shift_m + ceil_log2(window_length(cfg, trace_length));
}

int feature_word_width(const IntegratorConfig& cfg, std::size_t trace_length) {
  return std::clamp(tree_sum_width(cfg, trace_length) - cfg.shift_n, 1, kMaxFeatureWidth);
}

std::size_t feature_bits(const IntegratorConfig& cfg, std::size_t trace_length) {
  return 2 * cfg.num_windows * static_cast<std::size_t>(feature_word_width(cfg, trace_length));
}

FeatureVector integrate(const TraceRecord& trace, const IntegratorConfig& cfg) {
  const std::size_t T = trace.i_samples.size();
  if (trace.q_samples.size() != T) throw ConfigError("I and Q lengths differ");
  const std::size_t len = window_length(cfg, T);
  const int width = feature_word_width(cfg, T);
  const std::int64_t lo = -(std::int64_t{1} << (width - 1));
  const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;

  FeatureVector fv;
  fv.word_width = width;
  fv.words.reserve(2 * cfg.num_windows);
  for (std::size_t w = 0; w < cfg.num_windows; ++w) {
    const std::size_t begin = cfg.start_sample + w * len;
    for (const auto* ch : {&trace.i_samples, &trace.q_samples}) {
      std::int64_t acc = 0;
      // >> on signed values is arithmetic (floor) in C++20.
      for (std::size_t s = begin; s < begin + len; ++s) acc += (*ch)[s] >> cfg.shift_m;
      const std::int64_t word = acc >> cfg.shift_n;
      if (word < lo || word > hi)
        throw FeatureOverflow("window " + std::to_string(w) + " value " + std::to_string(word) +
                              " does not fit " + std::to_string(width) + " bits");
      fv.words.push_back(static_cast<std::int32_t>(word));
    }
  }
  return fv;
}

int integrator_cycles(const IntegratorConfig& cfg, std::size_t trace_length) {
  return ceil_log2(window_length(cfg, trace_length));
}

FeatureSet featurize(const Dataset& ds, std::span<const std::size_t> indices, const IntegratorConfig& cfg) {
  FeatureSet fs;
  fs.word_width = feature_word_width(cfg, ds.trace_length());
  fs.words_per_vector = 2 * cfg.num_windows;
  fs.words.reserve(indices.size() * fs.words_per_vector);
  fs.labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    const auto& rec = ds.records.at(idx);
    auto fv = integrate(rec, cfg);
    fs.words.insert(fs.words.end(), fv.words.begin(), fv.words.end());
    fs.labels.push_back(rec.label);
  }
  return fs;
}

}  // namespace luna
