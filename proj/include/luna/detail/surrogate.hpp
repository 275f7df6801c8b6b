#pragma once

// Differentiable training surrogate behind luna::train. Exposed for tests.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "luna/lutnet.hpp"

namespace luna::detail {

inline constexpr double kNormEps = 1e-5;

class Surrogate {
 public:
  /// quantize=false replaces each hidden quantizer by clamp(a, -r, r), whose
  /// exact gradient equals the straight-through estimate.
  Surrogate(const NetTopology& net, std::uint64_t seed, bool quantize = true);

  /// Loads a batch: bits row-major [sample][feature bit], labels per sample.
  void set_batch(std::span<const std::uint8_t> bits, std::span<const std::uint8_t> labels);

  /// Forward pass with batch statistics; returns the mean binary cross-entropy.
  double forward();
  /// Gradient of the last forward loss into grad().
  void backward();

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& grad() const { return grad_; }

  /// Indices of learned quantizer ranges inside params().
  const std::vector<std::size_t>& range_params() const { return range_index_; }

  /// Folds normalization using statistics over the full set and returns the
  /// evaluation-mode network.
  TrainedNet finalize(std::span<const std::uint8_t> bits, std::size_t samples) const;

  const NetTopology& topology() const { return net_; }

 private:
  struct Layer {
    std::size_t w_off = 0, gain_off = 0, bias_off = 0;
    std::ptrdiff_t range_off = -1;  // -1: fixed range 1.0 (output layer)
    std::vector<double> z, xhat, a, out, inv_std, d_out;
  };

  double range(std::size_t j) const { return layers_[j].range_off < 0 ? 1.0 : theta_[std::size_t(layers_[j].range_off)]; }

  NetTopology net_;
  bool quantize_;
  std::vector<double> theta_, grad_;
  std::vector<std::size_t> range_index_;
  std::vector<Layer> layers_;
  std::vector<double> input_;  // [bit][batch]
  std::vector<double> labels_;
  std::size_t batch_ = 0;
};

}  // namespace luna::detail
