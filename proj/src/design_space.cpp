#include "luna/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "luna/error.hpp"

namespace luna {

namespace {

std::vector<int> range(int lo, int hi, int step = 1) {
  std::vector<int> v;
  for (int x = lo; x <= hi; x += step) v.push_back(x);
  return v;
}

constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "start_sample", "num_windows", "shift_m", "shift_n", "l0",     "num_hidden", "l1",     "l2",
    "l3",           "beta_i",      "beta",    "beta_o",  "gamma_i", "gamma",      "gamma_o"};

}  // namespace

std::string_view field_name(Field f) { return kFieldNames[static_cast<std::size_t>(f)]; }

IntegratorConfig DesignPoint::integrator() const {
  return {static_cast<std::size_t>(start_sample), static_cast<std::size_t>(num_windows), shift_m, shift_n};
}

std::vector<int> DesignPoint::layer_widths() const {
  std::vector<int> w{l0};
  for (int h = 0; h < num_hidden; ++h) w.push_back(hidden[static_cast<std::size_t>(h)]);
  w.push_back(1);
  return w;
}

Encoded encode(const DesignPoint& dp) {
  return {double(dp.start_sample), double(dp.num_windows), double(dp.shift_m), double(dp.shift_n),
          double(dp.l0),           double(dp.num_hidden),  double(dp.hidden[0]), double(dp.hidden[1]),
          double(dp.hidden[2]),    double(dp.beta_i),      double(dp.beta),    double(dp.beta_o),
          double(dp.gamma_i),      double(dp.gamma),       double(dp.gamma_o)};
}

SearchSpace SearchSpace::defaults() {
  SearchSpace s;
  s.start_sample = {0, 50, 100};
  s.num_windows = range(1, 4);
  s.shift_m = range(2, 7);
  s.shift_n = range(0, 6);
  s.l0 = range(25, 145, 5);
  s.num_hidden = {2, 3};
  s.hidden = range(5, 45, 5);
  s.beta_i = {1, 2};
  s.beta = {1, 2};
  s.beta_o = {1, 2};
  s.gamma_i = {6, 7};
  s.gamma_by_beta = {{1, range(6, 16)}, {2, {6, 7, 8}}};
  return s;
}

const std::vector<int>& SearchSpace::grid(Field f, int beta_value) const {
  switch (f) {
    case Field::start_sample: return start_sample;
    case Field::num_windows: return num_windows;
    case Field::shift_m: return shift_m;
    case Field::shift_n: return shift_n;
    case Field::l0: return l0;
    case Field::num_hidden: return num_hidden;
    case Field::l1:
    case Field::l2:
    case Field::l3: return hidden;
    case Field::beta_i: return beta_i;
    case Field::beta: return beta;
    case Field::beta_o: return beta_o;
    case Field::gamma_i: return gamma_i;
    case Field::gamma:
    case Field::gamma_o: {
      auto it = gamma_by_beta.find(beta_value);
      if (it == gamma_by_beta.end())
        throw ConfigError("no gamma grid for beta=" + std::to_string(beta_value));
      return it->second;
    }
  }
  throw ConfigError("unknown field");
}

void SearchSpace::normalize() {
  auto fix = [](std::vector<int>& g, std::string_view name) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    if (g.empty()) throw ConfigError("empty grid for " + std::string(name));
  };
  fix(start_sample, "start_sample");
  fix(num_windows, "num_windows");
  fix(shift_m, "shift_m");
  fix(shift_n, "shift_n");
  fix(l0, "l0");
  fix(num_hidden, "num_hidden");
  fix(hidden, "hidden");
  fix(beta_i, "beta_i");
  fix(beta, "beta");
  fix(beta_o, "beta_o");
  fix(gamma_i, "gamma_i");
  for (int b : beta) {
    auto it = gamma_by_beta.find(b);
    if (it == gamma_by_beta.end()) throw ConfigError("no gamma grid for beta=" + std::to_string(b));
    fix(it->second, "gamma");
  }
  if (num_hidden.front() < 1 || num_hidden.back() > kMaxHidden)
    throw ConfigError("num_hidden grid must lie in [1, 3]");
}

bool SearchSpace::contains(const DesignPoint& dp) const {
  const Encoded v = encode(dp);
  for (std::size_t k = 0; k < kFieldCount; ++k) {
    const auto& g = grid(static_cast<Field>(k), dp.beta);
    if (!std::binary_search(g.begin(), g.end(), static_cast<int>(v[k]))) return false;
  }
  return true;
}

int snap(double x, std::span<const int> g) {
  if (g.empty()) throw ConfigError("snap on empty grid");
  if (std::isnan(x)) return g.front();
  if (x <= g.front()) return g.front();
  if (x >= g.back()) return g.back();
  auto hi = std::lower_bound(g.begin(), g.end(), x, [](int a, double b) { return a < b; });
  auto lo = hi - 1;
  return (x - *lo <= *hi - x) ? *lo : *hi;
}

DesignPoint sanitize(std::span<const double> raw, const SearchSpace& space) {
  if (raw.size() != kFieldCount) throw ConfigError("encoded vector has wrong length");
  auto at = [&](Field f) { return raw[static_cast<std::size_t>(f)]; };
  auto s = [&](Field f, int beta_value = 0) { return snap(at(f), space.grid(f, beta_value)); };

  DesignPoint dp;
  dp.start_sample = s(Field::start_sample);
  dp.num_windows = s(Field::num_windows);
  dp.shift_m = s(Field::shift_m);
  dp.shift_n = s(Field::shift_n);
  dp.l0 = s(Field::l0);
  dp.num_hidden = s(Field::num_hidden);
  dp.hidden = {s(Field::l1), s(Field::l2), s(Field::l3)};
  dp.beta_i = s(Field::beta_i);
  dp.beta = s(Field::beta);
  dp.beta_o = s(Field::beta_o);
  dp.gamma_i = s(Field::gamma_i);
  dp.gamma = s(Field::gamma, dp.beta);
  dp.gamma_o = s(Field::gamma_o, dp.beta);
  return dp;
}

DesignPoint sample_design(Rng& rng, const SearchSpace& space) {
  Encoded v{};
  int beta_value = 0;
  for (std::size_t k = 0; k < kFieldCount; ++k) {
    const auto f = static_cast<Field>(k);
    const auto& g = space.grid(f, beta_value);
    v[k] = g[rng.below(g.size())];
    if (f == Field::beta) beta_value = static_cast<int>(v[k]);
  }
  return sanitize(v, space);
}

nlohmann::ordered_json to_json(const DesignPoint& dp) {
  nlohmann::ordered_json j;
  j["start_sample"] = dp.start_sample;
  j["num_windows"] = dp.num_windows;
  j["shift_m"] = dp.shift_m;
  j["shift_n"] = dp.shift_n;
  j["l0"] = dp.l0;
  j["num_hidden"] = dp.num_hidden;
  j["l1"] = dp.hidden[0];
  j["l2"] = dp.hidden[1];
  j["l3"] = dp.hidden[2];
  j["beta_i"] = dp.beta_i;
  j["beta"] = dp.beta;
  j["beta_o"] = dp.beta_o;
  j["gamma_i"] = dp.gamma_i;
  j["gamma"] = dp.gamma;
  j["gamma_o"] = dp.gamma_o;
  return j;
}

DesignPoint design_from_json(const nlohmann::json& j) {
  try {
    DesignPoint dp;
    dp.start_sample = j.at("start_sample").get<int>();
    dp.num_windows = j.at("num_windows").get<int>();
    dp.shift_m = j.at("shift_m").get<int>();
    dp.shift_n = j.at("shift_n").get<int>();
    dp.l0 = j.at("l0").get<int>();
    dp.num_hidden = j.at("num_hidden").get<int>();
    dp.hidden = {j.at("l1").get<int>(), j.at("l2").get<int>(), j.at("l3").get<int>()};
    dp.beta_i = j.at("beta_i").get<int>();
    dp.beta = j.at("beta").get<int>();
    dp.beta_o = j.at("beta_o").get<int>();
    dp.gamma_i = j.at("gamma_i").get<int>();
    dp.gamma = j.at("gamma").get<int>();
    dp.gamma_o = j.at("gamma_o").get<int>();
    if (dp.num_hidden < 1 || dp.num_hidden > kMaxHidden) throw ConfigError("num_hidden must lie in [1, 3]");
    return dp;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("design point JSON: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const SearchSpace& s) {
  nlohmann::ordered_json j;
  j["start_sample"] = s.start_sample;
  j["num_windows"] = s.num_windows;
  j["shift_m"] = s.shift_m;
  j["shift_n"] = s.shift_n;
  j["l0"] = s.l0;
  j["num_hidden"] = s.num_hidden;
  j["hidden"] = s.hidden;
  j["beta_i"] = s.beta_i;
  j["beta"] = s.beta;
  j["beta_o"] = s.beta_o;
  j["gamma_i"] = s.gamma_i;
  nlohmann::ordered_json g;
  for (const auto& [b, grid] : s.gamma_by_beta) g[std::to_string(b)] = grid;
  j["gamma_by_beta"] = g;
  return j;
}

SearchSpace space_from_json(const nlohmann::json& j) {
  SearchSpace s = SearchSpace::defaults();
  try {
    auto opt = [&](const char* key, std::vector<int>& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::vector<int>>();
    };
    opt("start_sample", s.start_sample);
    opt("num_windows", s.num_windows);
    opt("shift_m", s.shift_m);
    opt("shift_n", s.shift_n);
    opt("l0", s.l0);
    opt("num_hidden", s.num_hidden);
    opt("hidden", s.hidden);
    opt("beta_i", s.beta_i);
    opt("beta", s.beta);
    opt("beta_o", s.beta_o);
    opt("gamma_i", s.gamma_i);
    if (j.contains("gamma_by_beta")) {
      s.gamma_by_beta.clear();
      for (const auto& [key, grid] : j.at("gamma_by_beta").items())
        s.gamma_by_beta[std::stoi(key)] = grid.get<std::vector<int>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("search space JSON: ") + e.what());
  }
  s.normalize();
  return s;
}

}  // namespace luna
