#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "luna/integrator.hpp"
#include "luna/rng.hpp"

namespace luna {

inline constexpr int kMaxHidden = 3;

/// One candidate: integrator parameters plus network architecture. The output
/// layer always has one NEQ and is not encoded.
struct DesignPoint {
  int start_sample = 0;
  int num_windows = 1;
  int shift_m = 2;
  int shift_n = 0;
  int l0 = 25;
  int num_hidden = 2;
  std::array<int, kMaxHidden> hidden{5, 5, 5};  // slots past num_hidden are inert
  int beta_i = 1;
  int beta = 1;
  int beta_o = 1;
  int gamma_i = 6;
  int gamma = 6;
  int gamma_o = 6;

  IntegratorConfig integrator() const;
  /// [l0, hidden..., 1]
  std::vector<int> layer_widths() const;
  /// NEQ layers including input and output layers.
  int stage_count() const { return num_hidden + 2; }

  friend bool operator==(const DesignPoint&, const DesignPoint&) = default;
};

/// Stable order of the encoded vector.
enum class Field : std::size_t {
  start_sample,
  num_windows,
  shift_m,
  shift_n,
  l0,
  num_hidden,
  l1,
  l2,
  l3,
  beta_i,
  beta,
  beta_o,
  gamma_i,
  gamma,
  gamma_o,
};
inline constexpr std::size_t kFieldCount = 15;

std::string_view field_name(Field f);

using Encoded = std::array<double, kFieldCount>;

Encoded encode(const DesignPoint& dp);

/// Allowed values per field. The gamma and gamma_o grids are keyed by beta,
/// the bitwidth of the elements those layers consume.
struct SearchSpace {
  std::vector<int> start_sample;
  std::vector<int> num_windows;
  std::vector<int> shift_m;
  std::vector<int> shift_n;
  std::vector<int> l0;
  std::vector<int> num_hidden;
  std::vector<int> hidden;
  std::vector<int> beta_i;
  std::vector<int> beta;
  std::vector<int> beta_o;
  std::vector<int> gamma_i;
  std::map<int, std::vector<int>> gamma_by_beta;

  /// Default grids.
  static SearchSpace defaults();

  /// Grid for a field; gamma/gamma_o use the given beta.
  const std::vector<int>& grid(Field f, int beta_value) const;

  bool contains(const DesignPoint& dp) const;

  /// Sorts and deduplicates grids; throws ConfigError on empty grids.
  void normalize();
};

/// Nearest grid value after clipping; ties go to the smaller value.
int snap(double x, std::span<const int> sorted_grid);

/// Clip-and-snap every component; beta is resolved before gamma/gamma_o.
DesignPoint sanitize(std::span<const double> raw, const SearchSpace& space);

/// Independent uniform draw per field.
DesignPoint sample_design(Rng& rng, const SearchSpace& space);

nlohmann::ordered_json to_json(const DesignPoint& dp);
DesignPoint design_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const SearchSpace& s);
SearchSpace space_from_json(const nlohmann::json& j);

}  // namespace luna
