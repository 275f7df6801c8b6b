#include <cstdio>
#include <string>

#include "luna/error.hpp"
#include "luna/lutnet.hpp"
#include "luna/rng.hpp"

namespace luna {

namespace {

constexpr const char* kTableFormat = "luna-lutnet-tables-1";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::ordered_json shape_json(const LayerShape& s) {
  return {{"neurons", s.neurons},
          {"element_bits", s.element_bits},
          {"fan_in", s.fan_in},
          {"input_bits", s.input_bits()},
          {"output_bits", s.output_bits}};
}

LayerShape shape_from_json(const nlohmann::json& j) {
  LayerShape s;
  s.neurons = j.at("neurons").get<int>();
  s.element_bits = j.at("element_bits").get<int>();
  s.fan_in = j.at("fan_in").get<int>();
  s.output_bits = j.at("output_bits").get<int>();
  if (s.neurons < 1 || s.element_bits < 1 || s.element_bits > 8 || s.fan_in < 1 || s.output_bits < 1 ||
      s.output_bits > 8)
    throw FormatError("layer shape out of range");
  if (s.input_bits() > kMaxTableInputs) throw TableSizeError("layer exceeds 16 table inputs");
  return s;
}

std::size_t neuron_bytes(const LayerShape& s) {
  const std::size_t bits = (std::size_t{1} << s.input_bits()) * static_cast<std::size_t>(s.output_bits);
  return (bits + 7) / 8;
}

}  // namespace

nlohmann::ordered_json to_json(const NetTopology& net) {
  nlohmann::ordered_json j;
  j["input_words"] = net.input.words;
  j["word_width"] = net.input.word_width;
  j["seed"] = net.seed;
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto lj = shape_json(net.layers[l]);
    lj["connectivity"] = net.connectivity[l];
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

NetTopology topology_from_json(const nlohmann::json& j) {
  try {
    NetTopology net;
    net.input.words = j.at("input_words").get<std::size_t>();
    net.input.word_width = j.at("word_width").get<int>();
    net.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& lj : j.at("layers")) {
      net.layers.push_back(shape_from_json(lj));
      net.connectivity.push_back(lj.at("connectivity").get<std::vector<std::vector<std::uint32_t>>>());
    }
    check_topology(net);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("topology JSON: ") + e.what());
  } catch (const InfeasibleTopology& e) {
    throw FormatError(std::string("topology JSON: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const TrainedNet& net) {
  nlohmann::ordered_json j;
  j["topology"] = to_json(net.topology);
  j["act_range"] = net.act_range;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& layer : net.neurons) {
    auto lj = nlohmann::ordered_json::array();
    for (const auto& p : layer) lj.push_back({{"weights", p.weights}, {"scale", p.scale}, {"offset", p.offset}});
    layers.push_back(std::move(lj));
  }
  j["neurons"] = std::move(layers);
  j["epochs_trained"] = net.epochs_trained;
  j["batch_size"] = net.batch_size;
  j["train_seed"] = net.train_seed;
  return j;
}

TrainedNet trained_from_json(const nlohmann::json& j) {
  try {
    TrainedNet net;
    net.topology = topology_from_json(j.at("topology"));
    net.act_range = j.at("act_range").get<std::vector<double>>();
    for (const auto& lj : j.at("neurons")) {
      auto& layer = net.neurons.emplace_back();
      for (const auto& pj : lj)
        layer.push_back({pj.at("weights").get<std::vector<double>>(), pj.at("scale").get<double>(),
                         pj.at("offset").get<double>()});
    }
    net.epochs_trained = j.at("epochs_trained").get<int>();
    net.batch_size = j.at("batch_size").get<std::size_t>();
    net.train_seed = j.at("train_seed").get<std::uint64_t>();
    if (net.neurons.size() != net.topology.layers.size() || net.act_range.size() != net.neurons.size())
      throw FormatError("trained net layer count mismatch");
    for (std::size_t l = 0; l < net.neurons.size(); ++l) {
      if (net.neurons[l].size() != static_cast<std::size_t>(net.topology.layers[l].neurons))
        throw FormatError("trained net neuron count mismatch");
      for (const auto& p : net.neurons[l])
        if (p.weights.size() != static_cast<std::size_t>(net.topology.layers[l].fan_in))
          throw FormatError("weights do not match connectivity");
      if (!(net.act_range[l] > 0.0)) throw FormatError("degenerate quantizer range");
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trained net JSON: ") + e.what());
  }
}

std::uint64_t table_checksum(const TruthTableNet& ttn) {
  std::uint64_t h = fnv1a64(nullptr, 0);
  for (const auto& layer : ttn.layers)
    for (const auto& t : layer.tables) h = fnv1a64(t.data(), t.size(), h);
  return h;
}

TableBlob encode_tables(const TruthTableNet& ttn, const std::string& blob_name) {
  TableBlob out;
  auto& j = out.index;
  j["format"] = kTableFormat;
  j["input_words"] = ttn.input.words;
  j["word_width"] = ttn.input.word_width;
  j["blob"] = blob_name;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& layer : ttn.layers) {
    auto lj = shape_json(layer.shape);
    auto neurons = nlohmann::ordered_json::array();
    const std::size_t bytes = neuron_bytes(layer.shape);
    for (std::size_t n = 0; n < layer.tables.size(); ++n) {
      const std::size_t offset = out.blob.size();
      out.blob.resize(offset + bytes, 0);
      const auto& t = layer.tables[n];
      const auto y = static_cast<std::size_t>(layer.shape.output_bits);
      for (std::size_t e = 0; e < t.size(); ++e)
        for (std::size_t b = 0; b < y; ++b)
          if ((t[e] >> b) & 1u) {
            const std::size_t bit = e * y + b;
            out.blob[offset + bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
          }
      neurons.push_back({{"inputs", layer.connectivity[n]}, {"offset", offset}, {"entries", t.size()}});
    }
    lj["tables"] = std::move(neurons);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["blob_bytes"] = out.blob.size();
  j["blob_fnv1a64"] = hex64(fnv1a64(out.blob.data(), out.blob.size()));
  j["table_checksum"] = hex64(table_checksum(ttn));
  return out;
}

TruthTableNet decode_tables(const nlohmann::json& j, std::span<const std::uint8_t> blob) {
  TruthTableNet ttn;
  try {
    if (j.at("format").get<std::string>() != kTableFormat) throw FormatError("unknown table format");
    if (j.at("blob_bytes").get<std::size_t>() != blob.size())
      throw VerificationError("table blob size " + std::to_string(blob.size()) + " differs from index");
    if (j.at("blob_fnv1a64").get<std::string>() != hex64(fnv1a64(blob.data(), blob.size())))
      throw VerificationError("table blob checksum mismatch");
    ttn.input.words = j.at("input_words").get<std::size_t>();
    ttn.input.word_width = j.at("word_width").get<int>();
    for (const auto& lj : j.at("layers")) {
      auto& layer = ttn.layers.emplace_back();
      layer.shape = shape_from_json(lj);
      const std::size_t bytes = neuron_bytes(layer.shape);
      const std::size_t entries = std::size_t{1} << layer.shape.input_bits();
      const auto y = static_cast<std::size_t>(layer.shape.output_bits);
      for (const auto& nj : lj.at("tables")) {
        layer.connectivity.push_back(nj.at("inputs").get<std::vector<std::uint32_t>>());
        const auto offset = nj.at("offset").get<std::size_t>();
        if (nj.at("entries").get<std::size_t>() != entries) throw TableSizeError("table entry count is not 2^X");
        if (offset + bytes > blob.size()) throw FormatError("table offset past end of blob");
        auto& t = layer.tables.emplace_back(entries, 0);
        for (std::size_t e = 0; e < entries; ++e)
          for (std::size_t b = 0; b < y; ++b) {
            const std::size_t bit = e * y + b;
            if ((blob[offset + bit / 8] >> (bit % 8)) & 1u) t[e] |= static_cast<std::uint8_t>(1u << b);
          }
      }
      if (layer.tables.size() != static_cast<std::size_t>(layer.shape.neurons))
        throw FormatError("neuron count mismatch in table index");
    }
    if (ttn.layers.empty()) throw FormatError("table net has no layers");
    if (j.at("table_checksum").get<std::string>() != hex64(table_checksum(ttn)))
      throw VerificationError("decoded tables do not match the recorded checksum");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("table index JSON: ") + e.what());
  }
  NetTopology shape_check;
  shape_check.input = ttn.input;
  for (const auto& layer : ttn.layers) {
    shape_check.layers.push_back(layer.shape);
    shape_check.connectivity.push_back(layer.connectivity);
  }
  try {
    check_topology(shape_check);
  } catch (const InfeasibleTopology& e) {
    throw FormatError(std::string("table index: ") + e.what());
  }
  return ttn;
}

void write_table_net(const TruthTableNet& ttn, const std::filesystem::path& json_path) {
  const auto blob_path = std::filesystem::path(json_path).replace_extension(".bin");
  const auto encoded = encode_tables(ttn, blob_path.filename().string());
  write_file(blob_path, encoded.blob);
  write_file(json_path, encoded.index.dump(1) + "\n");
}

TruthTableNet read_table_net(const std::filesystem::path& json_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.string() + ": " + e.what());
  }
  const auto blob_path = json_path.parent_path() / j.value("blob", std::string{});
  const std::string blob = read_file(blob_path);
  return decode_tables(j, std::span(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size()));
}

}  // namespace luna
