#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace luna {

inline constexpr const char* kToolVersion = "0.1.0";

/// Record of one CLI invocation, written as manifest.json in its output directory.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  double wall_seconds = 0.0;
};

/// FNV-1a 64 of the file bytes as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::filesystem::path& dir);

}  // namespace luna
