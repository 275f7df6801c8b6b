#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "luna/design_space.hpp"
#include "luna/integrator.hpp"

namespace luna {

inline constexpr int kMaxTableInputs = 16;

/// Shape of one NEQ layer. The input layer reads individual feature bits
/// (element_bits = 1); later layers read beta-bit codes of the previous layer.
struct LayerShape {
  int neurons = 0;
  int element_bits = 1;
  int fan_in = 0;       // elements read per neuron
  int output_bits = 1;  // Y
  int input_bits() const { return element_bits * fan_in; }  // X

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Layer shapes implied by a design point. Hidden and output fan-in is capped
/// at the width of the preceding layer.
std::vector<LayerShape> layer_shapes(const DesignPoint& dp);

struct FeatureLayout {
  std::size_t words = 0;
  int word_width = 1;
  std::size_t bits() const { return words * static_cast<std::size_t>(word_width); }
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

FeatureLayout feature_layout(const IntegratorConfig& cfg, std::size_t trace_length);

struct NetTopology {
  FeatureLayout input;
  std::vector<LayerShape> layers;
  /// [layer][neuron] -> sorted predecessor indices (feature bits for layer 0).
  std::vector<std::vector<std::vector<std::uint32_t>>> connectivity;
  std::uint64_t seed = 0;

  std::size_t layer_count() const { return layers.size(); }
  /// Number of elements layer j reads from.
  std::size_t predecessor_count(std::size_t layer) const;

  friend bool operator==(const NetTopology&, const NetTopology&) = default;
};

/// Draws connectivity uniformly without replacement, deterministic in seed.
/// Throws InfeasibleTopology when the input layer needs more bits than exist,
/// TableSizeError when a layer would exceed 16 table inputs.
NetTopology build_topology(const DesignPoint& dp, FeatureLayout input, std::uint64_t seed);

/// Structural check: fan-in, distinct sorted indices in range, X <= 16.
void check_topology(const NetTopology& net);

// Uniform quantizer with 2^bits levels at r*(2c - (L-1))/(L-1), c = 0..L-1.
int quantize_code(double a, int bits, double range);
double code_level(int code, int bits, double range);
/// Output decision: class 1 iff code >= 2^(bits-1).
inline int decode_class(int code, int bits) { return code >= (1 << (bits - 1)) ? 1 : 0; }

struct NeuronParams {
  std::vector<double> weights;
  double scale = 1.0;
  double offset = 0.0;

  friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

enum class Optimizer { sgd, adam };

struct TrainOptions {
  int epochs = 5;
  std::size_t batch_size = 512;
  double learning_rate = 0.01;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 0;
};

struct TrainedNet {
  NetTopology topology;
  std::vector<std::vector<NeuronParams>> neurons;  // [layer][neuron]
  std::vector<double> act_range;                   // per layer
  int epochs_trained = 0;
  std::size_t batch_size = 0;
  std::uint64_t train_seed = 0;

  friend bool operator==(const TrainedNet&, const TrainedNet&) = default;
};

/// Input values a neuron sees for element values; bits map to -1/+1.
inline double bit_value(int bit) { return bit ? 1.0 : -1.0; }

/// Quantized forward function of one neuron on real-valued inputs.
int neuron_code(const TrainedNet& net, std::size_t layer, std::size_t neuron, std::span<const double> inputs);

/// Per-layer output codes of the quantized forward pass.
std::vector<std::vector<int>> forward_codes(const TrainedNet& net, const FeatureVector& fv);
int forward_class(const TrainedNet& net, const FeatureVector& fv);

/// Mini-batch training of the quantized surrogate (sparse linear, affine
/// normalization, quantized activation with straight-through gradients).
/// Throws TrainingError if the loss or a parameter becomes non-finite.
TrainedNet train(const NetTopology& net, const FeatureSet& train_set, const TrainOptions& opt);

struct LutLayer {
  LayerShape shape;
  std::vector<std::vector<std::uint32_t>> connectivity;
  std::vector<std::vector<std::uint8_t>> tables;  // [neuron][pattern] -> code

  friend bool operator==(const LutLayer&, const LutLayer&) = default;
};

struct TruthTableNet {
  FeatureLayout input;
  std::vector<LutLayer> layers;

  int output_bits() const { return layers.back().shape.output_bits; }
  friend bool operator==(const TruthTableNet&, const TruthTableNet&) = default;
};

/// Enumerates all 2^X input patterns of every neuron. Element k of a pattern
/// occupies index bits [k*b, (k+1)*b), LSB first.
TruthTableNet extract_tables(const TrainedNet& net);

/// Two's-complement bits of each word, LSB first, words in order.
std::vector<std::uint8_t> flatten_bits(const FeatureVector& fv);

/// Table index for neuron inputs given the previous layer's values.
std::uint32_t table_index(std::span<const std::uint32_t> connectivity, std::span<const int> prev, int element_bits);

std::vector<std::vector<int>> infer_codes(const TruthTableNet& ttn, const FeatureVector& fv);
int infer(const TruthTableNet& ttn, const FeatureVector& fv);

struct Confusion {
  std::size_t class0 = 0;
  std::size_t class1 = 0;
  std::size_t predicted1_given0 = 0;
  std::size_t predicted0_given1 = 0;
};

/// 1 - 0.5 * (P(0|1) + P(1|0)).
double fidelity_from_rates(double p0_given1, double p1_given0);
/// Throws MetricError if a class is absent.
double fidelity(const Confusion& c);

double fidelity(const TruthTableNet& ttn, const FeatureSet& features);
double fidelity(const TruthTableNet& ttn, const IntegratorConfig& cfg, const Dataset& ds,
                std::span<const std::size_t> indices);

// Serialization. The table net is a JSON index plus a raw bit blob; entries
// are packed LSB first, output_bits per entry, each neuron byte-aligned.
nlohmann::ordered_json to_json(const NetTopology& net);
NetTopology topology_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const TrainedNet& net);
TrainedNet trained_from_json(const nlohmann::json& j);

struct TableBlob {
  nlohmann::ordered_json index;
  std::vector<std::uint8_t> blob;
};
TableBlob encode_tables(const TruthTableNet& ttn, const std::string& blob_name);
/// Throws VerificationError on checksum or size mismatch, FormatError on bad JSON.
TruthTableNet decode_tables(const nlohmann::json& index, std::span<const std::uint8_t> blob);

/// Writes <path> and its sidecar blob <path stem>.bin next to it.
void write_table_net(const TruthTableNet& ttn, const std::filesystem::path& json_path);
TruthTableNet read_table_net(const std::filesystem::path& json_path);
std::uint64_t table_checksum(const TruthTableNet& ttn);

}  // namespace luna
