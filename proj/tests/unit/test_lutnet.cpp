#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "helpers.hpp"
#include "luna/detail/surrogate.hpp"
#include "luna/error.hpp"
#include "luna/lutnet.hpp"
#include "luna/trace_data.hpp"
#include "table_check.hpp"

using namespace luna;

namespace {

DesignPoint small_design(int beta, int l0 = 12, int h = 6) {
  DesignPoint dp;
  dp.start_sample = 0;
  dp.num_windows = 1;
  dp.shift_m = 2;
  dp.shift_n = 0;
  dp.l0 = l0;
  dp.num_hidden = 1;
  dp.hidden = {h, 5, 5};
  dp.beta_i = 1;
  dp.beta = beta;
  dp.beta_o = beta;
  dp.gamma_i = 6;
  dp.gamma = 3;
  dp.gamma_o = 3;
  return dp;
}

struct Trained {
  IntegratorConfig cfg;
  Dataset ds;
  TrainedNet net;
};

Trained train_small(const DesignPoint& dp, double separation, std::uint64_t seed, std::size_t n = 2000) {
  SynthParams p;
  p.n = n;
  p.trace_length = 40;
  p.separation = separation;
  p.noise_sd = 300;
  p.seed = seed;
  Trained t{dp.integrator(), synth_dataset(p), {}};
  const auto fs = featurize(t.ds, t.ds.train_indices, t.cfg);
  const auto topo = build_topology(dp, feature_layout(t.cfg, 40), derive_seed(seed, {0}));
  TrainOptions opt;
  opt.epochs = 5;
  opt.batch_size = 256;
  opt.seed = derive_seed(seed, {1});
  t.net = train(topo, fs, opt);
  return t;
}

// One-neuron network computing AND of two +/-1 bits.
TrainedNet and_net() {
  TrainedNet net;
  net.topology.input = {1, 2};
  net.topology.layers = {LayerShape{1, 1, 2, 1}};
  net.topology.connectivity = {{{0, 1}}};
  net.neurons = {{NeuronParams{{1.0, 1.0}, 1.0, -1.0}}};
  net.act_range = {1.0};
  return net;
}

}  // namespace

TEST_SUITE("lutnet") {
  TEST_CASE("topology is deterministic in the seed") {
    const auto dp = test::fidelity_row();
    const FeatureLayout in = feature_layout(dp.integrator(), 500);
    const auto a = build_topology(dp, in, 42);
    const auto b = build_topology(dp, in, 42);
    CHECK(a == b);
    CHECK(build_topology(dp, in, 43) != a);
    CHECK_NOTHROW(check_topology(a));
  }

  TEST_CASE("connectivity is distinct, sorted and in range") {
    const auto dp = test::area_row();
    const auto net = build_topology(dp, feature_layout(dp.integrator(), 500), 1);
    REQUIRE(net.layers.size() == 4);
    CHECK(net.layers[0].neurons == 25);
    // Five predecessors cannot supply six distinct inputs; the cap applies.
    for (std::size_t j = 1; j + 1 < net.layers.size(); ++j) {
      const auto want = std::min<std::size_t>(6, net.predecessor_count(j));
      for (const auto& conn : net.connectivity[j]) {
        CHECK(conn.size() == want);
        CHECK(std::set<std::uint32_t>(conn.begin(), conn.end()).size() == want);
      }
    }
    CHECK(net.connectivity[1][0].size() == 6);
    for (std::size_t j = 0; j < net.layers.size(); ++j)
      for (const auto& conn : net.connectivity[j]) {
        CHECK(std::is_sorted(conn.begin(), conn.end()));
        CHECK(conn.back() < net.predecessor_count(j));
      }
  }

  TEST_CASE("fan-in is capped at the preceding width") {
    const auto shapes = layer_shapes(test::area_row());
    REQUIRE(shapes.size() == 4);
    CHECK(shapes[3].fan_in == 5);
    CHECK(shapes[3].input_bits() == 5);
    const auto fid = layer_shapes(test::fidelity_row());
    CHECK(fid[1].input_bits() == 12);
    CHECK(fid[3].input_bits() == 16);
    CHECK(fid[0].input_bits() == 7);
  }

  TEST_CASE("too few feature bits is infeasible") {
    auto dp = small_design(1);
    dp.gamma_i = 7;
    CHECK_THROWS_AS(build_topology(dp, FeatureLayout{1, 5}, 1), InfeasibleTopology);
    CHECK_NOTHROW(build_topology(dp, FeatureLayout{1, 7}, 1));
  }

  TEST_CASE("tables wider than 16 inputs are rejected") {
    auto dp = small_design(3);
    dp.gamma = 6;  // X = 18
    CHECK_THROWS_AS(build_topology(dp, FeatureLayout{2, 8}, 1), TableSizeError);
  }

  TEST_CASE("quantizer levels round trip") {
    for (int bits = 1; bits <= 3; ++bits)
      for (double r : {0.25, 1.0, 3.5}) {
        const int top = (1 << bits) - 1;
        for (int c = 0; c <= top; ++c) CHECK(quantize_code(code_level(c, bits, r), bits, r) == c);
        CHECK(quantize_code(-100.0, bits, r) == 0);
        CHECK(quantize_code(100.0, bits, r) == top);
        CHECK(code_level(0, bits, r) == doctest::Approx(-r));
        CHECK(code_level(top, bits, r) == doctest::Approx(r));
      }
    CHECK(quantize_code(-1e-9, 1, 1.0) == 0);
    CHECK(quantize_code(0.0, 1, 1.0) == 1);
    CHECK(decode_class(1, 1) == 1);
    CHECK(decode_class(1, 2) == 0);
    CHECK(decode_class(2, 2) == 1);
  }

  TEST_CASE("hand-built AND neuron") {
    const auto net = and_net();
    const auto ttn = extract_tables(net);
    REQUIRE(ttn.layers.size() == 1);
    CHECK(ttn.layers[0].tables[0] == std::vector<std::uint8_t>{0, 0, 0, 1});
    CHECK(infer(ttn, FeatureVector{{-1}, 2}) == 1);
    CHECK(infer(ttn, FeatureVector{{1}, 2}) == 0);
    CHECK(forward_class(net, FeatureVector{{-1}, 2}) == 1);
  }

  TEST_CASE("constant neurons give constant tables") {
    auto net = and_net();
    net.neurons[0][0] = NeuronParams{{0.0, 0.0}, 0.0, 0.5};
    CHECK(extract_tables(net).layers[0].tables[0] == std::vector<std::uint8_t>{1, 1, 1, 1});
    net.neurons[0][0].offset = -0.5;
    CHECK(extract_tables(net).layers[0].tables[0] == std::vector<std::uint8_t>{0, 0, 0, 0});
  }

  TEST_CASE("tables equal the quantized forward function") {
    Rng rng(11);
    for (int beta : {1, 2}) {
      CAPTURE(beta);
      const auto t = train_small(small_design(beta), 200, 5 + static_cast<std::uint64_t>(beta));
      const auto ttn = extract_tables(t.net);
      CHECK(test::check_tables(t.net, ttn, rng).mismatches == 0);
      for (std::size_t k : t.ds.test_indices) {
        const auto fv = integrate(t.ds.records[k], t.cfg);
        REQUIRE(infer(ttn, fv) == forward_class(t.net, fv));
      }
    }
  }

  TEST_CASE("wide tables are checked on random patterns") {
    auto dp = small_design(2, 12, 6);
    dp.gamma = 7;  // X = 14
    dp.gamma_o = 6;
    const auto t = train_small(dp, 200, 3, 600);
    REQUIRE(t.net.topology.layers[1].input_bits() == 14);
    Rng rng(4);
    CHECK(test::check_tables(t.net, extract_tables(t.net), rng).mismatches == 0);
  }

  TEST_CASE("inference rejects mismatched features") {
    const auto ttn = extract_tables(and_net());
    CHECK_THROWS_AS(infer(ttn, FeatureVector{{1, 2}, 2}), InterfaceError);
    CHECK_THROWS_AS(infer(ttn, FeatureVector{{1}, 3}), InterfaceError);
  }

  TEST_CASE("fidelity formula") {
    CHECK(fidelity_from_rates(0.05, 0.03) == doctest::Approx(0.96));
    Confusion c;
    c.class0 = 100;
    c.class1 = 100;
    c.predicted0_given1 = 100;  // constant class-0 predictor
    CHECK(fidelity(c) == doctest::Approx(0.5));
    c.class1 = 0;
    c.predicted0_given1 = 0;
    CHECK_THROWS_AS(fidelity(c), MetricError);
  }

  TEST_CASE("separable data trains to near-perfect fidelity") {
    const auto dp = small_design(1, 25, 5);
    const auto t = train_small(dp, 300, 21, 4000);
    const auto ttn = extract_tables(t.net);
    CHECK(fidelity(ttn, t.cfg, t.ds, t.ds.test_indices) >= 0.99);
  }

  TEST_CASE("inseparable data stays near chance") {
    const auto t = train_small(small_design(1, 25, 5), 0, 22, 10000);
    const double f = fidelity(extract_tables(t.net), t.cfg, t.ds, t.ds.test_indices);
    CHECK(f >= 0.45);
    CHECK(f <= 0.55);
  }

  TEST_CASE("training is deterministic") {
    const auto a = train_small(small_design(2), 100, 8, 500);
    const auto b = train_small(small_design(2), 100, 8, 500);
    CHECK(a.net == b.net);
  }

  TEST_CASE("bad training options") {
    const auto dp = small_design(1);
    const auto t = train_small(dp, 100, 1, 100);
    const auto fs = featurize(t.ds, t.ds.train_indices, t.cfg);
    TrainOptions opt;
    opt.epochs = 0;
    CHECK_THROWS_AS(train(t.net.topology, fs, opt), ConfigError);
    opt.epochs = 1;
    opt.batch_size = 1;
    CHECK_THROWS_AS(train(t.net.topology, fs, opt), ConfigError);
  }

  TEST_CASE("surrogate gradient matches finite differences") {
    const auto dp = small_design(2, 8, 4);
    const auto topo = build_topology(dp, FeatureLayout{2, 6}, 9);
    detail::Surrogate s(topo, 3, false);
    Rng rng(5);
    const std::size_t B = 32, fb = topo.input.bits();
    std::vector<std::uint8_t> bits(B * fb), labels(B);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(2));
    s.set_batch(bits, labels);
    // Push ranges up so few activations sit exactly at a clamp kink.
    for (std::size_t i : s.range_params()) s.params()[i] = 1.7;
    s.forward();
    s.backward();
    const auto g = s.grad();
    auto& th = s.params();
    std::size_t bad = 0;
    constexpr double h = 1e-6;
    for (std::size_t i = 0; i < th.size(); ++i) {
      const double keep = th[i];
      th[i] = keep + h;
      const double up = s.forward();
      th[i] = keep - h;
      const double dn = s.forward();
      th[i] = keep;
      const double fd = (up - dn) / (2 * h);
      if (std::abs(fd - g[i]) > 1e-5 + 1e-4 * std::abs(fd)) ++bad;
    }
    CHECK(bad == 0);
  }

  TEST_CASE("table blob round trip and corruption") {
    test::TempDir dir("ln_blob");
    const auto t = train_small(small_design(2), 150, 2, 400);
    const auto ttn = extract_tables(t.net);
    write_table_net(ttn, dir / "tables.json");
    CHECK(read_table_net(dir / "tables.json") == ttn);

    const auto enc = encode_tables(ttn, "tables.bin");
    CHECK(decode_tables(enc.index, enc.blob) == ttn);
    auto blob = enc.blob;
    blob[blob.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(decode_tables(enc.index, blob), VerificationError);
    blob = enc.blob;
    blob.pop_back();
    CHECK_THROWS_AS(decode_tables(enc.index, blob), VerificationError);
  }

  TEST_CASE("trained network JSON round trip") {
    const auto t = train_small(small_design(1), 150, 6, 300);
    CHECK(trained_from_json(to_json(t.net)) == t.net);
    CHECK(topology_from_json(to_json(t.net.topology)) == t.net.topology);
  }
}
