#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "luna/rng.hpp"
#include "luna/trace_data.hpp"

namespace luna::test {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("luna_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline TraceRecord random_trace(Rng& rng, std::size_t T, int lo = kSampleMin, int hi = kSampleMax) {
  TraceRecord r;
  r.i_samples.resize(T);
  r.q_samples.resize(T);
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  for (auto& s : r.i_samples) s = static_cast<std::int16_t>(lo + static_cast<int>(rng.below(span)));
  for (auto& s : r.q_samples) s = static_cast<std::int16_t>(lo + static_cast<int>(rng.below(span)));
  r.label = static_cast<std::uint8_t>(rng.below(2));
  return r;
}

}  // namespace luna::test
