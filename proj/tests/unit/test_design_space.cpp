#include <doctest.h>

#include <cmath>

#include "luna/design_space.hpp"
#include "luna/error.hpp"

using namespace luna;

namespace {

Encoded valid_raw() { return encode(DesignPoint{}); }

double& at(Encoded& v, Field f) { return v[static_cast<std::size_t>(f)]; }

}  // namespace

TEST_SUITE("design_space") {
  TEST_CASE("default point is on the default grid") {
    CHECK(SearchSpace::defaults().contains(DesignPoint{}));
  }

  TEST_CASE("encoding order and names are stable") {
    DesignPoint dp;
    dp.start_sample = 50;
    dp.num_windows = 3;
    dp.shift_m = 4;
    dp.shift_n = 5;
    dp.l0 = 70;
    dp.num_hidden = 3;
    dp.hidden = {10, 20, 30};
    dp.beta_i = 2;
    dp.beta = 2;
    dp.beta_o = 1;
    dp.gamma_i = 7;
    dp.gamma = 8;
    dp.gamma_o = 6;
    const Encoded want{50, 3, 4, 5, 70, 3, 10, 20, 30, 2, 2, 1, 7, 8, 6};
    CHECK(encode(dp) == want);
    CHECK(field_name(Field::start_sample) == "start_sample");
    CHECK(field_name(Field::l2) == "l2");
    CHECK(field_name(Field::gamma_o) == "gamma_o");
    CHECK(sanitize(want, SearchSpace::defaults()) == dp);
  }

  TEST_CASE("sanitize snaps to the nearest grid value") {
    auto v = valid_raw();
    at(v, Field::l0) = 101.3;
    CHECK(sanitize(v, SearchSpace::defaults()).l0 == 100);
    at(v, Field::l0) = 103.0;
    CHECK(sanitize(v, SearchSpace::defaults()).l0 == 105);
  }

  TEST_CASE("sanitize ties go to the smaller value") {
    auto v = valid_raw();
    at(v, Field::l0) = 102.5;
    CHECK(sanitize(v, SearchSpace::defaults()).l0 == 100);
    at(v, Field::start_sample) = 25.0;
    CHECK(sanitize(v, SearchSpace::defaults()).start_sample == 0);
    at(v, Field::shift_m) = 4.5;
    CHECK(sanitize(v, SearchSpace::defaults()).shift_m == 4);
  }

  TEST_CASE("sanitize clips to the grid range") {
    auto v = valid_raw();
    at(v, Field::l0) = 1000;
    at(v, Field::num_windows) = -3;
    at(v, Field::shift_n) = std::nan("");
    const auto dp = sanitize(v, SearchSpace::defaults());
    CHECK(dp.l0 == 145);
    CHECK(dp.num_windows == 1);
    CHECK(dp.shift_n == 0);
  }

  TEST_CASE("gamma is resolved against the snapped beta") {
    auto v = valid_raw();
    at(v, Field::beta) = 1.7;
    at(v, Field::gamma) = 12.0;
    at(v, Field::gamma_o) = 7.4;
    auto dp = sanitize(v, SearchSpace::defaults());
    CHECK(dp.beta == 2);
    CHECK(dp.gamma == 8);
    CHECK(dp.gamma_o == 7);
    at(v, Field::beta) = 1.2;
    dp = sanitize(v, SearchSpace::defaults());
    CHECK(dp.beta == 1);
    CHECK(dp.gamma == 12);
  }

  TEST_CASE("sanitize is idempotent on valid points") {
    Rng rng(1);
    const auto space = SearchSpace::defaults();
    for (int k = 0; k < 500; ++k) {
      const auto dp = sample_design(rng, space);
      CHECK(space.contains(dp));
      CHECK(sanitize(encode(dp), space) == dp);
    }
  }

  TEST_CASE("sanitize always lands on the grid") {
    Rng rng(2);
    const auto space = SearchSpace::defaults();
    for (int k = 0; k < 500; ++k) {
      Encoded v{};
      for (auto& x : v) x = (rng.uniform() - 0.3) * 200.0;
      CHECK(space.contains(sanitize(v, space)));
    }
  }

  TEST_CASE("wrong vector length is rejected") {
    std::vector<double> v(3, 0.0);
    CHECK_THROWS_AS(sanitize(v, SearchSpace::defaults()), ConfigError);
  }

  TEST_CASE("layer widths and stage count") {
    DesignPoint dp;
    dp.l0 = 145;
    dp.num_hidden = 2;
    dp.hidden = {40, 15, 35};
    CHECK(dp.layer_widths() == std::vector<int>{145, 40, 15, 1});
    CHECK(dp.stage_count() == 4);
    dp.num_hidden = 3;
    CHECK(dp.layer_widths() == std::vector<int>{145, 40, 15, 35, 1});
    CHECK(dp.stage_count() == 5);
  }

  TEST_CASE("design JSON round trip") {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
      const auto dp = sample_design(rng, SearchSpace::defaults());
      CHECK(design_from_json(nlohmann::json::parse(to_json(dp).dump())) == dp);
    }
    CHECK_THROWS_AS(design_from_json(nlohmann::json::parse(R"({"l0": 5})")), FormatError);
  }

  TEST_CASE("search space JSON overrides grids") {
    const auto j = nlohmann::json::parse(R"({"shift_m": [9, 2, 9, 7], "gamma_by_beta": {"1": [6], "2": [6]}})");
    const auto s = space_from_json(j);
    CHECK(s.shift_m == std::vector<int>{2, 7, 9});
    CHECK(s.grid(Field::gamma, 1) == std::vector<int>{6});
    CHECK(s.l0 == SearchSpace::defaults().l0);
    const auto back = space_from_json(nlohmann::json::parse(to_json(s).dump()));
    CHECK(back.shift_m == s.shift_m);
    CHECK_THROWS_AS(space_from_json(nlohmann::json::parse(R"({"l0": []})")), ConfigError);
    CHECK_THROWS_AS(space_from_json(nlohmann::json::parse(R"({"gamma_by_beta": {"1": [6]}})")), ConfigError);
  }

  TEST_CASE("uniform sampling covers every grid value") {
    Rng rng(4);
    const auto space = SearchSpace::defaults();
    std::map<int, int> windows, l0;
    for (int k = 0; k < 5000; ++k) {
      const auto dp = sample_design(rng, space);
      ++windows[dp.num_windows];
      ++l0[dp.l0];
    }
    CHECK(windows.size() == space.num_windows.size());
    CHECK(l0.size() == space.l0.size());
  }
}
