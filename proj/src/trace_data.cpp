#include "luna/trace_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <json.hpp>

#include "luna/error.hpp"
#include "luna/rng.hpp"

namespace luna {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

void put_i16(std::vector<std::uint8_t>& out, std::int16_t v) {
  const auto u = static_cast<std::uint16_t>(v);
  out.push_back(static_cast<std::uint8_t>(u & 0xff));
  out.push_back(static_cast<std::uint8_t>(u >> 8));
}

std::int16_t get_i16(const std::uint8_t* p) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
}

void check_record(const TraceRecord& r, std::size_t index, std::size_t trace_length) {
  if (r.i_samples.size() != trace_length || r.q_samples.size() != trace_length)
    throw ValidationError(index, "trace length differs from header T=" + std::to_string(trace_length));
  if (r.label > 1) throw ValidationError(index, "label " + std::to_string(r.label) + " not in {0,1}");
  auto in_range = [](std::int16_t s) { return s >= kSampleMin && s <= kSampleMax; };
  for (const auto* ch : {&r.i_samples, &r.q_samples}) {
    auto bad = std::find_if_not(ch->begin(), ch->end(), in_range);
    if (bad != ch->end())
      throw ValidationError(index, "sample " + std::to_string(*bad) + " outside 14-bit range");
  }
}

void check_split(const Dataset& ds) {
  std::vector<char> seen(ds.size(), 0);
  for (const auto* part : {&ds.train_indices, &ds.test_indices}) {
    for (std::size_t idx : *part) {
      if (idx >= ds.size()) throw FormatError("split index " + std::to_string(idx) + " out of range");
      if (seen[idx]) throw FormatError("split index " + std::to_string(idx) + " used twice");
      seen[idx] = 1;
    }
  }
}

}  // namespace

void validate(const Dataset& ds) {
  for (std::size_t k = 0; k < ds.records.size(); ++k) check_record(ds.records[k], k, ds.trace_length());
  check_split(ds);
}

void apply_default_split(Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t n_train = n * 9 / 10;
  ds.train_indices.resize(n_train);
  std::iota(ds.train_indices.begin(), ds.train_indices.end(), std::size_t{0});
  ds.test_indices.resize(n - n_train);
  std::iota(ds.test_indices.begin(), ds.test_indices.end(), n_train);
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  validate(ds);
  const std::size_t T = ds.trace_length();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + ds.size() * (4 * T + 1));
  for (char c : kDatasetMagic) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, static_cast<std::uint32_t>(ds.size()));
  put_u32(out, static_cast<std::uint32_t>(T));
  for (const auto& r : ds.records) {
    for (auto s : r.i_samples) put_i16(out, s);
    for (auto s : r.q_samples) put_i16(out, s);
    out.push_back(r.label);
  }
  return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("file shorter than the 16-byte header");
  if (std::memcmp(bytes.data(), kDatasetMagic, sizeof kDatasetMagic) != 0)
    throw FormatError("bad magic, expected LUNADS01");
  const std::size_t n = get_u32(bytes.data() + 8);
  const std::size_t T = get_u32(bytes.data() + 12);
  const std::size_t record_bytes = 4 * T + 1;
  if (bytes.size() != kHeaderBytes + n * record_bytes)
    throw FormatError("size " + std::to_string(bytes.size()) + " does not match header (n=" +
                      std::to_string(n) + ", T=" + std::to_string(T) + ")");
  if (n > 0 && T == 0) throw FormatError("zero trace length");

  Dataset ds;
  ds.meta.trace_length = T;
  ds.records.resize(n);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::size_t k = 0; k < n; ++k) {
    auto& r = ds.records[k];
    r.i_samples.resize(T);
    r.q_samples.resize(T);
    for (std::size_t t = 0; t < T; ++t, p += 2) r.i_samples[t] = get_i16(p);
    for (std::size_t t = 0; t < T; ++t, p += 2) r.q_samples[t] = get_i16(p);
    r.label = *p++;
    check_record(r, k, T);
  }
  apply_default_split(ds);
  return ds;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dataset load_dataset(const std::filesystem::path& path, const std::optional<std::filesystem::path>& split_file) {
  const std::string raw = read_file(path);
  Dataset ds;
  try {
    ds = decode_dataset(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (split_file) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(*split_file));
      ds.train_indices = j.at("train").get<std::vector<std::size_t>>();
      ds.test_indices = j.at("test").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(split_file->string() + ": " + e.what());
    }
    check_split(ds);
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const auto bytes = encode_dataset(ds);
  try {
    write_file(path, bytes);
  } catch (const IoError& e) {
    throw IoError(std::string("writing dataset: ") + e.what());
  }
}

void write_split_file(const Dataset& ds, const std::filesystem::path& path) {
  nlohmann::json j;
  j["train"] = ds.train_indices;
  j["test"] = ds.test_indices;
  write_file(path, j.dump() + "\n");
}

Dataset synth_dataset(const SynthParams& p) {
  if (p.n == 0) throw ConfigError("synth_dataset: n must be positive");
  if (p.trace_length == 0) throw ConfigError("synth_dataset: T must be positive");
  if (!(p.noise_sd >= 0.0)) throw ConfigError("synth_dataset: noise_sd must be non-negative");
  if (!std::isfinite(p.separation)) throw ConfigError("synth_dataset: separation must be finite");

  Rng rng(p.seed);
  std::vector<std::uint8_t> labels(p.n, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(p.n / 2), labels.end(), std::uint8_t{1});
  for (std::size_t k = p.n; k > 1; --k) std::swap(labels[k - 1], labels[rng.below(k)]);

  const double half = p.separation / 2.0;
  auto draw = [&](double mean) {
    const double x = std::floor(mean + p.noise_sd * rng.normal() + 0.5);
    return static_cast<std::int16_t>(std::clamp(x, double{kSampleMin}, double{kSampleMax}));
  };

  Dataset ds;
  ds.meta = {p.trace_length, DataSource::synthetic, p.seed};
  ds.records.resize(p.n);
  for (std::size_t k = 0; k < p.n; ++k) {
    auto& r = ds.records[k];
    r.label = labels[k];
    const double mu_i = r.label ? half : -half;
    const double mu_q = -mu_i;
    r.i_samples.resize(p.trace_length);
    r.q_samples.resize(p.trace_length);
    for (std::size_t t = 0; t < p.trace_length; ++t) {
      r.i_samples[t] = draw(mu_i);
      r.q_samples[t] = draw(mu_q);
    }
  }
  apply_default_split(ds);
  return ds;
}

std::array<std::size_t, 2> label_counts(const Dataset& ds, std::span<const std::size_t> indices) {
  std::array<std::size_t, 2> c{0, 0};
  for (std::size_t idx : indices) ++c[ds.records.at(idx).label];
  return c;
}

NpyArray read_npy(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 10 || raw.compare(0, 6, "\x93NUMPY") != 0) throw FormatError(path.string() + ": not a .npy file");
  const int major = static_cast<unsigned char>(raw[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(raw[8]) | static_cast<unsigned char>(raw[9]) << 8;
    offset = 10;
  } else {
    if (raw.size() < 12) throw FormatError(path.string() + ": truncated header");
    header_len = get_u32(reinterpret_cast<const std::uint8_t*>(raw.data()) + 8);
    offset = 12;
  }
  if (raw.size() < offset + header_len) throw FormatError(path.string() + ": truncated header");
  const std::string header = raw.substr(offset, header_len);
  auto field = [&](const std::string& key) {
    const auto pos = header.find("'" + key + "'");
    if (pos == std::string::npos) throw FormatError(path.string() + ": header lacks " + key);
    return header.substr(header.find(':', pos) + 1);
  };
  std::string descr = field("descr");
  descr = descr.substr(descr.find('\'') + 1);
  descr = descr.substr(0, descr.find('\''));
  if (field("fortran_order").find("True") < field("fortran_order").find(','))
    throw FormatError(path.string() + ": Fortran-order arrays are not supported");

  NpyArray arr;
  std::string shape = field("shape");
  shape = shape.substr(shape.find('(') + 1, shape.find(')') - shape.find('(') - 1);
  std::size_t count = 1;
  for (std::size_t pos = 0; pos < shape.size();) {
    const auto next = shape.find(',', pos);
    const std::string tok = shape.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (tok.find_first_of("0123456789") != std::string::npos) {
      arr.shape.push_back(std::stoull(tok));
      count *= arr.shape.back();
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }

  const char* data = raw.data() + offset + header_len;
  const std::size_t avail = raw.size() - offset - header_len;
  auto need = [&](std::size_t width) {
    if (avail < count * width) throw FormatError(path.string() + ": data shorter than shape");
  };
  arr.values.resize(count);
  if (descr == "<i2" || descr == "|i1" || descr == "<i4" || descr == "<i8") {
    const std::size_t w = descr == "|i1" ? 1 : static_cast<std::size_t>(descr[2] - '0');
    need(w);
    for (std::size_t k = 0; k < count; ++k) {
      std::int64_t v = 0;
      std::memcpy(&v, data + k * w, w);
      if (w < 8) v = (v << (64 - 8 * w)) >> (64 - 8 * w);
      arr.values[k] = static_cast<double>(v);
    }
  } else if (descr == "|u1") {
    need(1);
    for (std::size_t k = 0; k < count; ++k) arr.values[k] = static_cast<unsigned char>(data[k]);
  } else if (descr == "<f4") {
    need(4);
    for (std::size_t k = 0; k < count; ++k) {
      float f;
      std::memcpy(&f, data + 4 * k, 4);
      arr.values[k] = f;
    }
  } else if (descr == "<f8") {
    need(8);
    std::memcpy(arr.values.data(), data, 8 * count);
  } else {
    throw FormatError(path.string() + ": unsupported dtype " + descr);
  }
  return arr;
}

Dataset import_npy(const std::filesystem::path& traces, const std::filesystem::path& labels) {
  const NpyArray x = read_npy(traces);
  const NpyArray y = read_npy(labels);
  if (x.shape.empty()) throw FormatError("trace array has no dimensions");
  const std::size_t n = x.shape[0];
  if (y.values.size() != n) throw FormatError("label count does not match trace count");

  bool interleaved = false;
  std::size_t T = 0;
  if (x.shape.size() == 3 && x.shape[2] == 2) {
    interleaved = true;
    T = x.shape[1];
  } else if (x.shape.size() == 2 && x.shape[1] % 2 == 0) {
    T = x.shape[1] / 2;
  } else {
    throw FormatError("trace array must have shape (n, T, 2) or (n, 2T)");
  }

  Dataset ds;
  ds.meta = {T, DataSource::real, std::nullopt};
  ds.records.resize(n);
  auto to_sample = [](double v, std::size_t rec) {
    const double r = std::floor(v + 0.5);
    if (!(r >= kSampleMin && r <= kSampleMax)) throw ValidationError(rec, "sample outside 14-bit range");
    return static_cast<std::int16_t>(r);
  };
  for (std::size_t k = 0; k < n; ++k) {
    auto& r = ds.records[k];
    r.i_samples.resize(T);
    r.q_samples.resize(T);
    const double* row = x.values.data() + k * 2 * T;
    for (std::size_t t = 0; t < T; ++t) {
      r.i_samples[t] = to_sample(interleaved ? row[2 * t] : row[t], k);
      r.q_samples[t] = to_sample(interleaved ? row[2 * t + 1] : row[T + t], k);
    }
    const double lab = y.values[k];
    if (lab != 0.0 && lab != 1.0) throw ValidationError(k, "label not in {0,1}");
    r.label = static_cast<std::uint8_t>(lab);
  }
  apply_default_split(ds);
  return ds;
}

}  // namespace luna
