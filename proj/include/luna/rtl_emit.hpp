#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "luna/design_space.hpp"
#include "luna/integrator.hpp"
#include "luna/lutnet.hpp"

namespace luna {

/// Emitted HDL for one design. The top module exposes clk, valid_in, one
/// signed 14-bit port per consumed sample (s_i_<n>, s_q_<n>), class_out and
/// valid_out. valid_out follows valid_in by exactly `latency` clock edges.
struct HdlDesign {
  std::string name;
  std::string top;
  std::vector<std::pair<std::string, std::string>> files;  // file name, text
  int latency = 0;
  int integrator_cycles = 0;
  int network_stages = 0;
  nlohmann::ordered_json manifest;

  std::vector<std::string> sources() const;
};

/// Throws ConsistencyError when ttn or cfg do not belong to dp, ConfigError on
/// a bad module name.
HdlDesign emit(const DesignPoint& dp, const TruthTableNet& ttn, const IntegratorConfig& cfg,
               std::size_t trace_length, const std::string& name = "luna");

/// Writes every HDL file plus <name>_hdl.json into dir; returns the paths.
std::vector<std::filesystem::path> write_hdl(const HdlDesign& d, const std::filesystem::path& dir);

}  // namespace luna
