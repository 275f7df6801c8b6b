#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "helpers.hpp"
#include "luna/costmodel.hpp"
#include "luna/error.hpp"
#include "luna/lutnet.hpp"
#include "luna/rtl_emit.hpp"
#include "luna/rtl_interp.hpp"

using namespace luna;

namespace {

DesignPoint tiny_design(int start, int windows, int m, int n, int beta) {
  DesignPoint dp;
  dp.start_sample = start;
  dp.num_windows = windows;
  dp.shift_m = m;
  dp.shift_n = n;
  dp.l0 = 10;
  dp.num_hidden = 2;
  dp.hidden = {6, 4, 5};
  dp.beta_i = 1;
  dp.beta = beta;
  dp.beta_o = beta;
  dp.gamma_i = 6;
  dp.gamma = 3;
  dp.gamma_o = 3;
  return dp;
}

// Random parameters are enough for equivalence; tables need not be useful.
TrainedNet random_net(const DesignPoint& dp, std::size_t T, std::uint64_t seed) {
  TrainedNet net;
  net.topology = build_topology(dp, feature_layout(dp.integrator(), T), seed);
  Rng rng(derive_seed(seed, {7}));
  net.neurons.resize(net.topology.layers.size());
  for (std::size_t j = 0; j < net.topology.layers.size(); ++j) {
    const auto& s = net.topology.layers[j];
    for (int k = 0; k < s.neurons; ++k) {
      NeuronParams p;
      for (int e = 0; e < s.fan_in; ++e) p.weights.push_back(2 * rng.uniform() - 1);
      p.scale = 0.5 + rng.uniform();
      p.offset = 0.4 * (rng.uniform() - 0.5);
      net.neurons[j].push_back(p);
    }
    net.act_range.push_back(j + 1 < net.topology.layers.size() ? 0.5 + rng.uniform() : 1.0);
  }
  return net;
}

// Traces whose sums stay inside the feature word for the given design.
std::vector<TraceRecord> traces_for(std::size_t count, std::size_t T, std::uint64_t seed, int lo = -2000,
                                    int hi = 2000) {
  Rng rng(seed);
  std::vector<TraceRecord> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(test::random_trace(rng, T, lo, hi));
  return out;
}

std::string module_with_function(const std::string& body) {
  return "module m (\n  input wire clk,\n  input wire [1:0] a,\n  output wire y\n);\n"
         "  function f;\n    input [1:0] idx;\n    case (idx)\n" +
         body + "    endcase\n  endfunction\n  assign y = f(a);\nendmodule\n";
}

}  // namespace

TEST_SUITE("rtl") {
  TEST_CASE("emission is deterministic and names the pipeline depth") {
    const auto dp = tiny_design(0, 2, 2, 1, 2);
    const auto ttn = extract_tables(random_net(dp, 40, 1));
    const auto a = emit(dp, ttn, dp.integrator(), 40, "dut");
    const auto b = emit(dp, ttn, dp.integrator(), 40, "dut");
    CHECK(a.sources() == b.sources());
    CHECK(a.manifest == b.manifest);
    REQUIRE(a.files.size() == 3);
    CHECK(a.files[0].first == "dut_integrator.v");
    CHECK(a.files[2].first == "dut_top.v");
    CHECK(a.latency == latency_estimate(dp, 40));
    CHECK(a.integrator_cycles == 5);  // windows of 20
    CHECK(a.network_stages == 4);
  }

  TEST_CASE("write_hdl writes the sources and the description") {
    test::TempDir dir("rtl_write");
    const auto dp = tiny_design(0, 1, 2, 0, 1);
    const auto hdl = emit(dp, extract_tables(random_net(dp, 8, 2)), dp.integrator(), 8, "w");
    const auto paths = write_hdl(hdl, dir.path());
    CHECK(paths.size() == 4);
    for (const auto& p : paths) CHECK(std::filesystem::exists(p));
    CHECK(read_file(paths[1]) == hdl.files[1].second);
  }

  TEST_CASE("interpreter agrees with table inference") {
    struct Case {
      DesignPoint dp;
      std::size_t T;
    };
    const std::vector<Case> cases = {
        {tiny_design(0, 1, 2, 0, 1), 1},    // one-sample window, no adder tree
        {tiny_design(0, 1, 3, 2, 2), 7},    // odd window
        {tiny_design(2, 2, 2, 1, 2), 25},   // odd windows after the start offset
        {tiny_design(0, 3, 4, 0, 1), 48},
    };
    for (std::size_t c = 0; c < cases.size(); ++c) {
      CAPTURE(c);
      const auto& [dp, T] = cases[c];
      const auto ttn = extract_tables(random_net(dp, T, 10 + c));
      const auto hdl = emit(dp, ttn, dp.integrator(), T);
      const auto traces = traces_for(300, T, 20 + c, kSampleMin, kSampleMax);
      const auto rep = check_equivalence(hdl, ttn, dp.integrator(), traces);
      CHECK(rep.checked + rep.skipped_overflow == traces.size());
      CHECK(rep.checked >= 250);
      CHECK(rep.class_mismatches == 0);
      CHECK(rep.cycle_mismatches == 0);
      CHECK(rep.passed());
      CHECK(interpret(hdl, traces.front()).cycles == latency_estimate(dp, T));
    }
  }

  TEST_CASE("one-sample windows have no adder tree") {
    const auto dp = tiny_design(0, 1, 2, 0, 1);
    const auto hdl = emit(dp, extract_tables(random_net(dp, 1, 3)), dp.integrator(), 1);
    CHECK(hdl.integrator_cycles == 0);
    CHECK(hdl.latency == 4);
  }

  TEST_CASE("two-window reference design is a 12-stage pipeline") {
    auto dp = test::fidelity_row();
    const auto ttn = extract_tables(random_net(dp, 500, 4));
    const auto hdl = emit(dp, ttn, dp.integrator(), 500);
    CHECK(hdl.integrator_cycles == 8);
    CHECK(hdl.latency == 12);
    const auto traces = traces_for(20, 500, 5);
    const auto rep = check_equivalence(hdl, ttn, dp.integrator(), traces);
    CHECK(rep.checked == 20);
    CHECK(rep.passed());
  }

  TEST_CASE("constant network") {
    const auto dp = tiny_design(0, 1, 2, 0, 1);
    auto net = random_net(dp, 4, 6);
    for (auto& layer : net.neurons)
      for (auto& p : layer) {
        std::fill(p.weights.begin(), p.weights.end(), 0.0);
        p.offset = 0.3;
      }
    const auto ttn = extract_tables(net);
    const auto hdl = emit(dp, ttn, dp.integrator(), 4);
    for (const auto& t : traces_for(20, 4, 7)) CHECK(interpret(hdl, t).class_bit == 1);
  }

  TEST_CASE("inconsistent inputs are rejected") {
    const auto dp = tiny_design(0, 1, 2, 0, 1);
    const auto ttn = extract_tables(random_net(dp, 8, 8));
    auto other = dp.integrator();
    other.shift_n = 1;
    CHECK_THROWS_AS(emit(dp, ttn, other, 8), ConsistencyError);
    CHECK_THROWS_AS(emit(dp, ttn, dp.integrator(), 16), ConsistencyError);
    auto dp2 = dp;
    dp2.hidden[0] = 7;
    CHECK_THROWS_AS(emit(dp2, ttn, dp2.integrator(), 8), ConsistencyError);
    auto bad = ttn;
    bad.layers[1].tables[0].pop_back();
    CHECK_THROWS_AS(emit(dp, bad, dp.integrator(), 8), ConsistencyError);
    CHECK_THROWS_AS(emit(dp, ttn, dp.integrator(), 8, "1bad"), ConfigError);
  }

  TEST_CASE("hand-written module") {
    const std::vector<std::string> src = {module_with_function(
        "      2'h0: f = 1'd0;\n      2'h1: f = 1'd1;\n      2'h2: f = 1'd1;\n      2'h3: f = 1'd0;\n")};
    const auto nl = Netlist::parse(src, "m");
    CHECK(nl.port("a").width == 2);
    Simulator sim(nl);
    for (int a = 0; a < 4; ++a) {
      sim.set("a", a);
      sim.settle();
      CHECK(sim.get("y") == (a == 1 || a == 2));
    }
    CHECK_THROWS_AS(nl.port("zz"), InterfaceError);
  }

  TEST_CASE("parse errors") {
    auto parses = [](const std::string& text) {
      const std::vector<std::string> src{text};
      return Netlist::parse(src, "m");
    };
    SUBCASE("non-exhaustive table") {
      CHECK_THROWS_AS(parses(module_with_function("      2'h0: f = 1'd0;\n      2'h1: f = 1'd1;\n")), ParseError);
    }
    SUBCASE("default arm") {
      CHECK_THROWS_AS(parses(module_with_function("      2'h0: f = 1'd0;\n      default: f = 1'd1;\n")),
                      ParseError);
    }
    SUBCASE("unknown syntax") {
      CHECK_THROWS_AS(parses("module m (input wire clk, output wire y);\n  assign y = clk * clk;\nendmodule\n"),
                      ParseError);
    }
    SUBCASE("multiple drivers") {
      CHECK_THROWS_AS(
          parses("module m (input wire clk, output wire y);\n  assign y = clk;\n  assign y = clk;\nendmodule\n"),
          ParseError);
    }
    SUBCASE("combinational loop") {
      CHECK_THROWS_AS(parses("module m (input wire clk, output wire y);\n  wire a;\n  wire b;\n"
                             "  assign a = b;\n  assign b = a;\n  assign y = a;\nendmodule\n"),
                      ParseError);
    }
    SUBCASE("missing top") {
      CHECK_THROWS_AS(parses("module n (input wire clk);\nendmodule\n"), ParseError);
    }
  }

  TEST_CASE("probe traces stay in range and are deterministic") {
    SynthParams p;
    p.n = 50;
    p.trace_length = 10;
    const auto ds = synth_dataset(p);
    const auto a = probe_traces(ds, 100, 64, 3);
    const auto b = probe_traces(ds, 100, 64, 3);
    CHECK(a.size() == 100);
    CHECK(a == b);
    for (const auto& t : a)
      for (auto s : t.i_samples) CHECK((s >= kSampleMin && s <= kSampleMax));
  }
}
