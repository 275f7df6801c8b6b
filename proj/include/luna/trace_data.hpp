#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace luna {

inline constexpr int kSampleMin = -8192;  // 14-bit two's complement
inline constexpr int kSampleMax = 8191;
inline constexpr std::size_t kDefaultTraceLength = 500;
inline constexpr std::size_t kHeaderBytes = 16;
inline constexpr char kDatasetMagic[8] = {'L', 'U', 'N', 'A', 'D', 'S', '0', '1'};

/// One labeled readout shot. label 0 is the ground state, 1 the excited state.
struct TraceRecord {
  std::vector<std::int16_t> i_samples;
  std::vector<std::int16_t> q_samples;
  std::uint8_t label = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class DataSource { real, synthetic };

struct DatasetMeta {
  std::size_t trace_length = kDefaultTraceLength;
  DataSource source = DataSource::real;
  std::optional<std::uint64_t> seed;  // set for synthetic data
};

struct Dataset {
  std::vector<TraceRecord> records;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  DatasetMeta meta;

  std::size_t size() const noexcept { return records.size(); }
  std::size_t trace_length() const noexcept { return meta.trace_length; }

  /// Records and split; provenance tags are not part of the on-disk bytes.
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.meta.trace_length == b.meta.trace_length && a.records == b.records &&
           a.train_indices == b.train_indices && a.test_indices == b.test_indices;
  }
};

/// Checks every record and the split. Throws ValidationError or FormatError.
void validate(const Dataset& ds);

/// First 90% train, remaining records test.
void apply_default_split(Dataset& ds);

/// Serialized container bytes (header + records).
std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::filesystem::path>& split_file = std::nullopt);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);

/// Sidecar split file: {"train": [...], "test": [...]}.
void write_split_file(const Dataset& ds, const std::filesystem::path& path);

struct SynthParams {
  std::size_t n = 10000;
  std::size_t trace_length = kDefaultTraceLength;
  double separation = 60.0;
  double noise_sd = 300.0;
  std::uint64_t seed = 0;
};

/// Constant per-class I/Q offsets plus i.i.d. Gaussian noise.
/// Class 0 sits at (-sep/2, +sep/2), class 1 at (+sep/2, -sep/2).
Dataset synth_dataset(const SynthParams& p);

/// Count of records per label over an index set.
std::array<std::size_t, 2> label_counts(const Dataset& ds, std::span<const std::size_t> indices);

/// Reads a NumPy .npy array (little-endian, C order; int16/int32/float32/float64).
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};
NpyArray read_npy(const std::filesystem::path& path);

/// Builds a dataset from a trace array and a label array.
/// Traces of shape (n, T, 2) are interleaved I/Q; shape (n, 2T) is all-I then all-Q.
/// Float inputs are rounded to the nearest integer before range checks.
Dataset import_npy(const std::filesystem::path& traces, const std::filesystem::path& labels);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace luna
