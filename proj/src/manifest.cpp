#include "luna/manifest.hpp"

#include <cstdio>

#include "luna/rng.hpp"
#include "luna/trace_data.hpp"

namespace luna {

std::string file_checksum(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["tool_version"] = kToolVersion;
  j["argv"] = m.argv;
  j["seed"] = m.seed;
  j["config"] = m.config;
  auto inputs = nlohmann::ordered_json::array();
  for (const auto& p : m.inputs) inputs.push_back({{"path", p.string()}, {"fnv1a64", file_checksum(p)}});
  j["inputs"] = inputs;
  auto outputs = nlohmann::ordered_json::array();
  for (const auto& p : m.outputs) outputs.push_back(p.string());
  j["outputs"] = outputs;
  j["wall_seconds"] = m.wall_seconds;
  return j;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& dir) {
  write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

}  // namespace luna
