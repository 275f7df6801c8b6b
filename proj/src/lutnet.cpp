#include "luna/lutnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "luna/error.hpp"
#include "luna/rng.hpp"

namespace luna {

std::vector<LayerShape> layer_shapes(const DesignPoint& dp) {
  const auto widths = dp.layer_widths();
  std::vector<LayerShape> shapes;
  shapes.reserve(widths.size());
  for (std::size_t j = 0; j < widths.size(); ++j) {
    LayerShape s;
    s.neurons = widths[j];
    const bool last = j + 1 == widths.size();
    s.output_bits = last ? dp.beta_o : dp.beta;
    if (j == 0) {
      s.element_bits = 1;
      s.fan_in = dp.gamma_i * dp.beta_i;
    } else {
      s.element_bits = dp.beta;
      s.fan_in = std::min(last ? dp.gamma_o : dp.gamma, widths[j - 1]);
    }
    shapes.push_back(s);
  }
  return shapes;
}

FeatureLayout feature_layout(const IntegratorConfig& cfg, std::size_t trace_length) {
  return {2 * cfg.num_windows, feature_word_width(cfg, trace_length)};
}

std::size_t NetTopology::predecessor_count(std::size_t layer) const {
  return layer == 0 ? input.bits() : static_cast<std::size_t>(layers[layer - 1].neurons);
}

void check_topology(const NetTopology& net) {
  if (net.layers.empty() || net.layers.back().neurons != 1)
    throw InfeasibleTopology("network must end in a single output NEQ");
  if (net.connectivity.size() != net.layers.size()) throw InfeasibleTopology("connectivity/layer count mismatch");
  for (std::size_t j = 0; j < net.layers.size(); ++j) {
    const auto& s = net.layers[j];
    if (s.input_bits() > kMaxTableInputs)
      throw TableSizeError("layer " + std::to_string(j) + " needs " + std::to_string(s.input_bits()) +
                           " table inputs (max 16)");
    const std::size_t preds = net.predecessor_count(j);
    if (net.connectivity[j].size() != static_cast<std::size_t>(s.neurons))
      throw InfeasibleTopology("layer " + std::to_string(j) + " neuron count mismatch");
    for (const auto& conn : net.connectivity[j]) {
      if (conn.size() != static_cast<std::size_t>(s.fan_in))
        throw InfeasibleTopology("layer " + std::to_string(j) + " fan-in mismatch");
      for (std::size_t k = 0; k < conn.size(); ++k) {
        if (conn[k] >= preds) throw InfeasibleTopology("connection index out of range");
        if (k > 0 && conn[k] <= conn[k - 1]) throw InfeasibleTopology("connections must be distinct and sorted");
      }
    }
  }
}

NetTopology build_topology(const DesignPoint& dp, FeatureLayout input, std::uint64_t seed) {
  NetTopology net;
  net.input = input;
  net.layers = layer_shapes(dp);
  net.seed = seed;
  if (input.bits() < static_cast<std::size_t>(net.layers.front().fan_in))
    throw InfeasibleTopology("input layer reads " + std::to_string(net.layers.front().fan_in) + " bits but only " +
                             std::to_string(input.bits()) + " feature bits exist");
  for (std::size_t j = 0; j < net.layers.size(); ++j)
    if (net.layers[j].input_bits() > kMaxTableInputs)
      throw TableSizeError("layer " + std::to_string(j) + " exceeds 16 table inputs");

  Rng rng(seed);
  net.connectivity.resize(net.layers.size());
  std::vector<std::uint32_t> pool;
  for (std::size_t j = 0; j < net.layers.size(); ++j) {
    const auto& s = net.layers[j];
    const std::size_t preds = net.predecessor_count(j);
    auto& layer = net.connectivity[j];
    layer.resize(static_cast<std::size_t>(s.neurons));
    for (auto& conn : layer) {
      pool.resize(preds);
      std::iota(pool.begin(), pool.end(), std::uint32_t{0});
      // Partial Fisher-Yates: the first fan_in slots become the sample.
      for (std::size_t k = 0; k < static_cast<std::size_t>(s.fan_in); ++k)
        std::swap(pool[k], pool[k + rng.below(preds - k)]);
      conn.assign(pool.begin(), pool.begin() + s.fan_in);
      std::sort(conn.begin(), conn.end());
    }
  }
  check_topology(net);
  return net;
}

int quantize_code(double a, int bits, double range) {
  const int top = (1 << bits) - 1;
  const double t = std::floor((a / range + 1.0) * 0.5 * top + 0.5);
  if (!(t > 0.0)) return 0;  // also catches NaN
  if (t >= top) return top;
  return static_cast<int>(t);
}

double code_level(int code, int bits, double range) {
  const int top = (1 << bits) - 1;
  return range * (2.0 * code - top) / top;
}

int neuron_code(const TrainedNet& net, std::size_t layer, std::size_t neuron, std::span<const double> inputs) {
  const auto& p = net.neurons[layer][neuron];
  double z = 0.0;
  for (std::size_t k = 0; k < p.weights.size(); ++k) z += p.weights[k] * inputs[k];
  const double a = p.scale * z + p.offset;
  return quantize_code(a, net.topology.layers[layer].output_bits, net.act_range[layer]);
}

std::vector<std::uint8_t> flatten_bits(const FeatureVector& fv) {
  std::vector<std::uint8_t> bits;
  bits.reserve(fv.words.size() * static_cast<std::size_t>(fv.word_width));
  for (std::int32_t w : fv.words) {
    const auto u = static_cast<std::uint32_t>(w);
    for (int b = 0; b < fv.word_width; ++b) bits.push_back(static_cast<std::uint8_t>((u >> b) & 1u));
  }
  return bits;
}

namespace {

void check_input(const FeatureLayout& layout, const FeatureVector& fv) {
  if (fv.words.size() != layout.words || fv.word_width != layout.word_width)
    throw InterfaceError("feature vector " + std::to_string(fv.words.size()) + "x" + std::to_string(fv.word_width) +
                         " does not match network input " + std::to_string(layout.words) + "x" +
                         std::to_string(layout.word_width));
}

}  // namespace

std::vector<std::vector<int>> forward_codes(const TrainedNet& net, const FeatureVector& fv) {
  const auto& topo = net.topology;
  check_input(topo.input, fv);
  const auto bits = flatten_bits(fv);
  std::vector<std::vector<int>> codes(topo.layers.size());
  std::vector<double> in;
  for (std::size_t j = 0; j < topo.layers.size(); ++j) {
    const auto& s = topo.layers[j];
    codes[j].resize(static_cast<std::size_t>(s.neurons));
    for (std::size_t n = 0; n < codes[j].size(); ++n) {
      const auto& conn = topo.connectivity[j][n];
      in.resize(conn.size());
      for (std::size_t k = 0; k < conn.size(); ++k)
        in[k] = j == 0 ? bit_value(bits[conn[k]])
                       : code_level(codes[j - 1][conn[k]], topo.layers[j - 1].output_bits, net.act_range[j - 1]);
      codes[j][n] = neuron_code(net, j, n, in);
    }
  }
  return codes;
}

int forward_class(const TrainedNet& net, const FeatureVector& fv) {
  const auto codes = forward_codes(net, fv);
  return decode_class(codes.back().front(), net.topology.layers.back().output_bits);
}

TruthTableNet extract_tables(const TrainedNet& net) {
  const auto& topo = net.topology;
  TruthTableNet ttn;
  ttn.input = topo.input;
  ttn.layers.resize(topo.layers.size());
  std::vector<double> in;
  for (std::size_t j = 0; j < topo.layers.size(); ++j) {
    const auto& s = topo.layers[j];
    const int x_bits = s.input_bits();
    if (x_bits > kMaxTableInputs) throw TableSizeError("layer " + std::to_string(j) + " exceeds 16 table inputs");
    auto& out = ttn.layers[j];
    out.shape = s;
    out.connectivity = topo.connectivity[j];
    out.tables.resize(static_cast<std::size_t>(s.neurons));
    const std::uint32_t entries = 1u << x_bits;
    const std::uint32_t elem_mask = (1u << s.element_bits) - 1;
    in.resize(static_cast<std::size_t>(s.fan_in));
    for (std::size_t n = 0; n < out.tables.size(); ++n) {
      auto& table = out.tables[n];
      table.resize(entries);
      for (std::uint32_t pattern = 0; pattern < entries; ++pattern) {
        for (int k = 0; k < s.fan_in; ++k) {
          const int code = static_cast<int>((pattern >> (k * s.element_bits)) & elem_mask);
          in[static_cast<std::size_t>(k)] =
              j == 0 ? bit_value(code) : code_level(code, topo.layers[j - 1].output_bits, net.act_range[j - 1]);
        }
        table[pattern] = static_cast<std::uint8_t>(neuron_code(net, j, n, in));
      }
    }
  }
  return ttn;
}

std::uint32_t table_index(std::span<const std::uint32_t> connectivity, std::span<const int> prev, int element_bits) {
  std::uint32_t idx = 0;
  for (std::size_t k = 0; k < connectivity.size(); ++k)
    idx |= static_cast<std::uint32_t>(prev[connectivity[k]]) << (k * static_cast<std::size_t>(element_bits));
  return idx;
}

std::vector<std::vector<int>> infer_codes(const TruthTableNet& ttn, const FeatureVector& fv) {
  check_input(ttn.input, fv);
  const auto bits = flatten_bits(fv);
  std::vector<int> prev(bits.begin(), bits.end());
  std::vector<std::vector<int>> codes(ttn.layers.size());
  for (std::size_t j = 0; j < ttn.layers.size(); ++j) {
    const auto& layer = ttn.layers[j];
    auto& cur = codes[j];
    cur.resize(layer.tables.size());
    for (std::size_t n = 0; n < cur.size(); ++n)
      cur[n] = layer.tables[n][table_index(layer.connectivity[n], prev, layer.shape.element_bits)];
    prev = cur;
  }
  return codes;
}

int infer(const TruthTableNet& ttn, const FeatureVector& fv) {
  const auto codes = infer_codes(ttn, fv);
  return decode_class(codes.back().front(), ttn.output_bits());
}

double fidelity_from_rates(double p0_given1, double p1_given0) { return 1.0 - 0.5 * (p0_given1 + p1_given0); }

double fidelity(const Confusion& c) {
  if (c.class0 == 0 || c.class1 == 0) throw MetricError("fidelity needs both classes in the test set");
  return fidelity_from_rates(static_cast<double>(c.predicted0_given1) / static_cast<double>(c.class1),
                             static_cast<double>(c.predicted1_given0) / static_cast<double>(c.class0));
}

double fidelity(const TruthTableNet& ttn, const FeatureSet& features) {
  Confusion c;
  for (std::size_t k = 0; k < features.size(); ++k) {
    const int pred = infer(ttn, features.vector(k));
    if (features.labels[k] == 0) {
      ++c.class0;
      c.predicted1_given0 += pred == 1;
    } else {
      ++c.class1;
      c.predicted0_given1 += pred == 0;
    }
  }
  return fidelity(c);
}

double fidelity(const TruthTableNet& ttn, const IntegratorConfig& cfg, const Dataset& ds,
                std::span<const std::size_t> indices) {
  return fidelity(ttn, featurize(ds, indices, cfg));
}

}  // namespace luna
