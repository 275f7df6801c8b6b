#include <doctest.h>

#include <cstring>
#include <fstream>

#include "helpers.hpp"
#include "luna/error.hpp"
#include "luna/trace_data.hpp"

using namespace luna;

namespace {

Dataset small_dataset(std::size_t n, std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.meta.trace_length = T;
  for (std::size_t k = 0; k < n; ++k) ds.records.push_back(test::random_trace(rng, T));
  apply_default_split(ds);
  return ds;
}

// Minimal NumPy v1.0 writer for the importer tests.
template <class T>
void write_npy(const std::filesystem::path& p, const std::string& descr, const std::vector<std::size_t>& shape,
               const std::vector<T>& data) {
  std::string dims;
  for (auto d : shape) dims += std::to_string(d) + ",";
  if (shape.size() > 1) dims.pop_back();
  std::string header = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (" + dims + "), }";
  while ((10 + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  std::ofstream out(p, std::ios::binary);
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  out.put(static_cast<char>(len & 0xff));
  out.put(static_cast<char>(len >> 8));
  out << header;
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(T)));
}

}  // namespace

TEST_SUITE("trace_data") {
  TEST_CASE("empty dataset is a bare 16-byte header") {
    Dataset ds;
    ds.meta.trace_length = 500;
    const auto bytes = encode_dataset(ds);
    CHECK(bytes.size() == 16);
    CHECK(std::memcmp(bytes.data(), "LUNADS01", 8) == 0);
    const auto back = decode_dataset(bytes);
    CHECK(back.size() == 0);
    CHECK(back.trace_length() == 500);
  }

  TEST_CASE("one record costs 2*T*2 + 1 bytes after the header") {
    const auto ds = small_dataset(1, 500, 3);
    CHECK(encode_dataset(ds).size() == 16 + 2 * 500 * 2 + 1);
  }

  TEST_CASE("little-endian layout") {
    Dataset ds;
    ds.meta.trace_length = 2;
    ds.records.push_back({{1, -2}, {0x0102, -8192}, 1});
    apply_default_split(ds);
    const auto b = encode_dataset(ds);
    REQUIRE(b.size() == 16 + 9);
    CHECK(b[8] == 1);  // n
    CHECK(b[12] == 2);  // T
    CHECK(b[16] == 0x01);
    CHECK(b[17] == 0x00);
    CHECK(b[18] == 0xfe);
    CHECK(b[19] == 0xff);
    CHECK(b[20] == 0x02);
    CHECK(b[21] == 0x01);
    CHECK(b[22] == 0x00);
    CHECK(b[23] == 0xe0);
    CHECK(b[24] == 1);
  }

  TEST_CASE("write then load is the identity") {
    test::TempDir dir("td_roundtrip");
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto ds = small_dataset(100, 37, seed);
      write_dataset(ds, dir / "d.bin");
      const auto back = load_dataset(dir / "d.bin");
      CHECK(back == ds);
      CHECK(back.size() == 100);
      CHECK(back.trace_length() == 37);
    }
    SUBCASE("synthetic 1000 records") {
      SynthParams p;
      p.n = 1000;
      p.trace_length = 50;
      p.seed = 9;
      const auto ds = synth_dataset(p);
      write_dataset(ds, dir / "s.bin");
      CHECK(load_dataset(dir / "s.bin") == ds);
    }
  }

  TEST_CASE("default split is 90/10, disjoint and covering") {
    const auto ds = small_dataset(101, 4, 5);
    CHECK(ds.train_indices.size() == 90);
    CHECK(ds.test_indices.size() == 11);
    CHECK(ds.train_indices.front() == 0);
    CHECK(ds.test_indices.front() == 90);
    CHECK(ds.test_indices.back() == 100);
  }

  TEST_CASE("out-of-range sample names the record") {
    auto ds = small_dataset(5, 10, 1);
    auto bytes = encode_dataset(ds);
    // record 3, I sample 4 := 9000
    const std::size_t off = 16 + 3 * (4 * 10 + 1) + 2 * 4;
    bytes[off] = 9000 & 0xff;
    bytes[off + 1] = 9000 >> 8;
    try {
      decode_dataset(bytes);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.record() == 3);
    }
  }

  TEST_CASE("malformed headers are format errors") {
    auto bytes = encode_dataset(small_dataset(2, 3, 1));
    SUBCASE("magic") {
      bytes[0] = 'X';
      CHECK_THROWS_AS(decode_dataset(bytes), FormatError);
    }
    SUBCASE("truncated") {
      bytes.pop_back();
      CHECK_THROWS_AS(decode_dataset(bytes), FormatError);
    }
    SUBCASE("short header") {
      bytes.resize(10);
      CHECK_THROWS_AS(decode_dataset(bytes), FormatError);
    }
    SUBCASE("bad label") {
      bytes[16 + 12] = 2;
      CHECK_THROWS_AS(decode_dataset(bytes), ValidationError);
    }
  }

  TEST_CASE("missing file is an I/O error") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/luna/d.bin"), IoError);
  }

  TEST_CASE("split file overrides the default split") {
    test::TempDir dir("td_split");
    auto ds = small_dataset(10, 3, 2);
    write_dataset(ds, dir / "d.bin");
    ds.train_indices = {9, 0, 1};
    ds.test_indices = {2, 5};
    write_split_file(ds, dir / "split.json");
    const auto back = load_dataset(dir / "d.bin", dir / "split.json");
    CHECK(back.train_indices == ds.train_indices);
    CHECK(back.test_indices == ds.test_indices);

    write_file(dir / "overlap.json", std::string(R"({"train":[1,2],"test":[2]})"));
    CHECK_THROWS_AS(load_dataset(dir / "d.bin", dir / "overlap.json"), FormatError);
    write_file(dir / "range.json", std::string(R"({"train":[1],"test":[10]})"));
    CHECK_THROWS_AS(load_dataset(dir / "d.bin", dir / "range.json"), FormatError);
  }

  TEST_CASE("synthetic data is deterministic in the seed") {
    SynthParams p;
    p.n = 200;
    p.trace_length = 20;
    p.seed = 7;
    const auto a = encode_dataset(synth_dataset(p));
    const auto b = encode_dataset(synth_dataset(p));
    CHECK(a == b);
    p.seed = 8;
    CHECK(encode_dataset(synth_dataset(p)) != a);
  }

  TEST_CASE("synthetic labels are balanced") {
    for (std::size_t n : {1u, 2u, 7u, 100u, 1001u}) {
      SynthParams p;
      p.n = n;
      p.trace_length = 2;
      const auto ds = synth_dataset(p);
      std::vector<std::size_t> all(n);
      for (std::size_t k = 0; k < n; ++k) all[k] = k;
      const auto c = label_counts(ds, all);
      CHECK(c[0] + c[1] == n);
      CHECK((c[0] > c[1] ? c[0] - c[1] : c[1] - c[0]) <= 1);
    }
  }

  TEST_CASE("synthetic class means differ by the separation") {
    SynthParams p;
    p.n = 10000;
    p.trace_length = 500;
    p.separation = 60;
    p.noise_sd = 300;
    p.seed = 7;
    const auto ds = synth_dataset(p);
    double sum_i[2] = {0, 0}, sum_q[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (const auto& r : ds.records) {
      for (auto s : r.i_samples) sum_i[r.label] += s;
      for (auto s : r.q_samples) sum_q[r.label] += s;
      ++count[r.label];
    }
    const double mi0 = sum_i[0] / double(count[0] * 500), mi1 = sum_i[1] / double(count[1] * 500);
    const double mq0 = sum_q[0] / double(count[0] * 500), mq1 = sum_q[1] / double(count[1] * 500);
    CHECK(std::abs((mi1 - mi0) - 60.0) <= 2.0);
    CHECK(std::abs((mq0 - mq1) - 60.0) <= 2.0);
  }

  TEST_CASE("noiseless synthetic data is constant per class") {
    SynthParams p;
    p.n = 10;
    p.trace_length = 5;
    p.separation = 100;
    p.noise_sd = 0;
    const auto ds = synth_dataset(p);
    for (const auto& r : ds.records) {
      const int want = r.label ? 50 : -50;
      for (auto s : r.i_samples) CHECK(s == want);
      for (auto s : r.q_samples) CHECK(s == -want);
    }
  }

  TEST_CASE("synthetic samples are clamped to 14 bits") {
    SynthParams p;
    p.n = 20;
    p.trace_length = 50;
    p.separation = 0;
    p.noise_sd = 20000;
    const auto ds = synth_dataset(p);
    bool hit_rail = false;
    for (const auto& r : ds.records)
      for (auto s : r.i_samples) {
        CHECK(s >= kSampleMin);
        CHECK(s <= kSampleMax);
        hit_rail = hit_rail || s == kSampleMin || s == kSampleMax;
      }
    CHECK(hit_rail);
    CHECK_NOTHROW(validate(ds));
  }

  TEST_CASE("bad synthetic parameters") {
    SynthParams p;
    p.noise_sd = -1;
    CHECK_THROWS_AS(synth_dataset(p), ConfigError);
    p.noise_sd = 1;
    p.n = 0;
    CHECK_THROWS_AS(synth_dataset(p), ConfigError);
  }

  TEST_CASE("npy import, interleaved and planar layouts") {
    test::TempDir dir("td_npy");
    // two traces, T = 3
    const std::vector<std::int16_t> inter = {1, -1, 2, -2, 3, -3, 10, 20, 30, 40, 50, 60};
    const std::vector<std::int64_t> labels = {0, 1};
    write_npy(dir / "x.npy", "<i2", {2, 3, 2}, inter);
    write_npy(dir / "y.npy", "<i8", {2}, labels);
    auto ds = import_npy(dir / "x.npy", dir / "y.npy");
    REQUIRE(ds.size() == 2);
    CHECK(ds.trace_length() == 3);
    CHECK(ds.records[0].i_samples == std::vector<std::int16_t>{1, 2, 3});
    CHECK(ds.records[0].q_samples == std::vector<std::int16_t>{-1, -2, -3});
    CHECK(ds.records[1].i_samples == std::vector<std::int16_t>{10, 30, 50});
    CHECK(ds.records[1].label == 1);

    const std::vector<float> planar = {1.4f, 2.6f, -3.f, 4.f, 0.f, 0.f, 0.f, 0.f};
    write_npy(dir / "p.npy", "<f4", {2, 4}, planar);
    ds = import_npy(dir / "p.npy", dir / "y.npy");
    CHECK(ds.trace_length() == 2);
    CHECK(ds.records[0].i_samples == std::vector<std::int16_t>{1, 3});
    CHECK(ds.records[0].q_samples == std::vector<std::int16_t>{-3, 4});

    const std::vector<std::int32_t> big = {9000, 0, 0, 0};
    write_npy(dir / "b.npy", "<i4", {1, 2, 2}, big);
    write_npy(dir / "y1.npy", "<i8", {1}, std::vector<std::int64_t>{0});
    CHECK_THROWS_AS(import_npy(dir / "b.npy", dir / "y1.npy"), ValidationError);
    CHECK_THROWS_AS(import_npy(dir / "x.npy", dir / "y1.npy"), FormatError);
  }
}
