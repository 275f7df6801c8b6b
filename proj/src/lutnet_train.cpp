#include <algorithm>
#include <cmath>
#include <numeric>

#include "luna/detail/surrogate.hpp"
#include "luna/error.hpp"
#include "luna/lutnet.hpp"
#include "luna/rng.hpp"

namespace luna {

namespace detail {

Surrogate::Surrogate(const NetTopology& net, std::uint64_t seed, bool quantize)
    : net_(net), quantize_(quantize), layers_(net.layers.size()) {
  check_topology(net_);
  Rng rng(seed);
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const auto& s = net_.layers[j];
    auto& L = layers_[j];
    const auto n = static_cast<std::size_t>(s.neurons);
    const auto f = static_cast<std::size_t>(s.fan_in);
    L.w_off = theta_.size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(f));
    for (std::size_t k = 0; k < n * f; ++k) theta_.push_back(bound * (2.0 * rng.uniform() - 1.0));
    L.gain_off = theta_.size();
    theta_.insert(theta_.end(), n, 1.0);
    L.bias_off = theta_.size();
    theta_.insert(theta_.end(), n, 0.0);
    if (j + 1 < layers_.size()) {
      L.range_off = static_cast<std::ptrdiff_t>(theta_.size());
      range_index_.push_back(theta_.size());
      theta_.push_back(1.0);
    }
  }
  grad_.assign(theta_.size(), 0.0);
}

void Surrogate::set_batch(std::span<const std::uint8_t> bits, std::span<const std::uint8_t> labels) {
  batch_ = labels.size();
  const std::size_t fb = net_.input.bits();
  if (bits.size() != batch_ * fb) throw InterfaceError("batch bit matrix has wrong size");
  input_.resize(fb * batch_);
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t i = 0; i < fb; ++i) input_[i * batch_ + b] = bit_value(bits[b * fb + i]);
  labels_.resize(batch_);
  for (std::size_t b = 0; b < batch_; ++b) labels_[b] = labels[b];
}

double Surrogate::forward() {
  const std::size_t B = batch_;
  const double invB = 1.0 / static_cast<double>(B);
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const auto& s = net_.layers[j];
    auto& L = layers_[j];
    const auto N = static_cast<std::size_t>(s.neurons);
    const auto F = static_cast<std::size_t>(s.fan_in);
    const std::vector<double>& prev = j == 0 ? input_ : layers_[j - 1].out;
    L.z.assign(N * B, 0.0);
    L.xhat.resize(N * B);
    L.a.resize(N * B);
    L.inv_std.resize(N);
    const bool last = j + 1 == layers_.size();
    if (!last) L.out.resize(N * B);
    const double r = range(j);
    for (std::size_t n = 0; n < N; ++n) {
      double* z = L.z.data() + n * B;
      const auto& conn = net_.connectivity[j][n];
      for (std::size_t k = 0; k < F; ++k) {
        const double w = theta_[L.w_off + n * F + k];
        const double* x = prev.data() + conn[k] * B;
        for (std::size_t b = 0; b < B; ++b) z[b] += w * x[b];
      }
      double mean = 0.0;
      for (std::size_t b = 0; b < B; ++b) mean += z[b];
      mean *= invB;
      double var = 0.0;
      for (std::size_t b = 0; b < B; ++b) var += (z[b] - mean) * (z[b] - mean);
      var *= invB;
      const double inv_std = 1.0 / std::sqrt(var + kNormEps);
      L.inv_std[n] = inv_std;
      const double gain = theta_[L.gain_off + n];
      const double bias = theta_[L.bias_off + n];
      for (std::size_t b = 0; b < B; ++b) {
        const double xh = (z[b] - mean) * inv_std;
        L.xhat[n * B + b] = xh;
        const double a = gain * xh + bias;
        L.a[n * B + b] = a;
        if (!last)
          L.out[n * B + b] = quantize_ ? code_level(quantize_code(a, s.output_bits, r), s.output_bits, r)
                                       : std::clamp(a, -r, r);
      }
    }
  }
  const auto& out = layers_.back().a;
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double a = out[b];
    // softplus(a) - y*a, computed stably
    loss += std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))) - labels_[b] * a;
  }
  return loss * invB;
}

void Surrogate::backward() {
  std::fill(grad_.begin(), grad_.end(), 0.0);
  const std::size_t B = batch_;
  const double invB = 1.0 / static_cast<double>(B);
  // d loss / d a for the current layer, [neuron][batch]
  std::vector<double> d_a(B);
  {
    const auto& a = layers_.back().a;
    for (std::size_t b = 0; b < B; ++b) d_a[b] = (1.0 / (1.0 + std::exp(-a[b])) - labels_[b]) * invB;
  }
  std::vector<double> dz(B);
  for (std::size_t jj = layers_.size(); jj-- > 0;) {
    const auto& s = net_.layers[jj];
    auto& L = layers_[jj];
    const auto N = static_cast<std::size_t>(s.neurons);
    const auto F = static_cast<std::size_t>(s.fan_in);
    const std::vector<double>& prev = jj == 0 ? input_ : layers_[jj - 1].out;
    std::vector<double>* d_prev = nullptr;
    if (jj > 0) {
      d_prev = &layers_[jj - 1].d_out;
      d_prev->assign(layers_[jj - 1].out.size(), 0.0);
    }
    for (std::size_t n = 0; n < N; ++n) {
      const double* da = d_a.data() + n * B;
      const double* xh = L.xhat.data() + n * B;
      double sum_d = 0.0, sum_dx = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        sum_d += da[b];
        sum_dx += da[b] * xh[b];
      }
      const double gain = theta_[L.gain_off + n];
      grad_[L.gain_off + n] += sum_dx;
      grad_[L.bias_off + n] += sum_d;
      const double m1 = gain * sum_d * invB;
      const double m2 = gain * sum_dx * invB;
      const double inv_std = L.inv_std[n];
      for (std::size_t b = 0; b < B; ++b) dz[b] = inv_std * (gain * da[b] - m1 - xh[b] * m2);
      const auto& conn = net_.connectivity[jj][n];
      for (std::size_t k = 0; k < F; ++k) {
        const double* x = prev.data() + conn[k] * B;
        double gw = 0.0;
        for (std::size_t b = 0; b < B; ++b) gw += dz[b] * x[b];
        grad_[L.w_off + n * F + k] += gw;
        if (d_prev) {
          const double w = theta_[L.w_off + n * F + k];
          double* dp = d_prev->data() + conn[k] * B;
          for (std::size_t b = 0; b < B; ++b) dp[b] += dz[b] * w;
        }
      }
    }
    if (jj == 0) break;
    // Through the previous layer's quantizer (straight-through inside the range).
    auto& P = layers_[jj - 1];
    const double r = range(jj - 1);
    d_a.assign(P.a.size(), 0.0);
    double d_range = 0.0;
    for (std::size_t i = 0; i < P.a.size(); ++i) {
      const double a = P.a[i];
      if (std::abs(a) <= r) {
        d_a[i] = P.d_out[i];
      } else {
        d_range += P.d_out[i] * (a > 0 ? 1.0 : -1.0);
      }
    }
    if (P.range_off >= 0) grad_[static_cast<std::size_t>(P.range_off)] += d_range;
  }
}

TrainedNet Surrogate::finalize(std::span<const std::uint8_t> bits, std::size_t samples) const {
  TrainedNet out;
  out.topology = net_;
  out.neurons.resize(layers_.size());
  out.act_range.resize(layers_.size());
  const std::size_t fb = net_.input.bits();
  std::vector<std::vector<std::uint8_t>> codes(layers_.size());
  std::vector<double> z(samples), in;
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    const auto& s = net_.layers[j];
    const auto& L = layers_[j];
    const auto N = static_cast<std::size_t>(s.neurons);
    const auto F = static_cast<std::size_t>(s.fan_in);
    out.act_range[j] = range(j);
    out.neurons[j].resize(N);
    codes[j].resize(N * samples);
    in.resize(F);
    for (std::size_t n = 0; n < N; ++n) {
      auto& p = out.neurons[j][n];
      p.weights.assign(theta_.begin() + static_cast<std::ptrdiff_t>(L.w_off + n * F),
                       theta_.begin() + static_cast<std::ptrdiff_t>(L.w_off + (n + 1) * F));
      const auto& conn = net_.connectivity[j][n];
      auto load_inputs = [&](std::size_t t) {
        for (std::size_t k = 0; k < F; ++k)
          in[k] = j == 0 ? bit_value(bits[t * fb + conn[k]])
                         : code_level(codes[j - 1][conn[k] * samples + t], net_.layers[j - 1].output_bits,
                                      out.act_range[j - 1]);
      };
      double mean = 0.0;
      for (std::size_t t = 0; t < samples; ++t) {
        load_inputs(t);
        double acc = 0.0;
        for (std::size_t k = 0; k < F; ++k) acc += p.weights[k] * in[k];
        z[t] = acc;
        mean += acc;
      }
      mean /= static_cast<double>(std::max<std::size_t>(samples, 1));
      double var = 0.0;
      for (std::size_t t = 0; t < samples; ++t) var += (z[t] - mean) * (z[t] - mean);
      var /= static_cast<double>(std::max<std::size_t>(samples, 1));
      const double gain = theta_[L.gain_off + n];
      const double bias = theta_[L.bias_off + n];
      p.scale = gain / std::sqrt(var + kNormEps);
      p.offset = bias - mean * p.scale;
      if (j + 1 < layers_.size()) {
        for (std::size_t t = 0; t < samples; ++t) {
          load_inputs(t);
          codes[j][n * samples + t] = static_cast<std::uint8_t>(neuron_code(out, j, n, in));
        }
      }
    }
  }
  return out;
}

}  // namespace detail

TrainedNet train(const NetTopology& net, const FeatureSet& train_set, const TrainOptions& opt) {
  if (opt.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (opt.batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (!(opt.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (train_set.words_per_vector != net.input.words || train_set.word_width != net.input.word_width)
    throw InterfaceError("training features do not match the network input layout");
  const std::size_t samples = train_set.size();
  if (samples < 2) throw ConfigError("training needs at least two samples");

  const std::size_t fb = net.input.bits();
  std::vector<std::uint8_t> bits;
  bits.reserve(samples * fb);
  for (std::size_t t = 0; t < samples; ++t) {
    const auto fv = train_set.vector(t);
    const auto b = flatten_bits(fv);
    bits.insert(bits.end(), b.begin(), b.end());
  }

  detail::Surrogate model(net, derive_seed(opt.seed, {0}));
  auto& theta = model.params();
  std::vector<double> m1(theta.size(), 0.0), m2(theta.size(), 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint8_t> batch_bits, batch_labels;
  const std::size_t batch = std::min(opt.batch_size, samples);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng(derive_seed(opt.seed, {1, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t k = samples; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    for (std::size_t start = 0; start + 1 < samples; start += batch) {
      const std::size_t end = std::min(start + batch, samples);
      batch_bits.clear();
      batch_labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t t = order[k];
        batch_bits.insert(batch_bits.end(), bits.begin() + static_cast<std::ptrdiff_t>(t * fb),
                          bits.begin() + static_cast<std::ptrdiff_t>((t + 1) * fb));
        batch_labels.push_back(train_set.labels[t]);
      }
      model.set_batch(batch_bits, batch_labels);
      const double loss = model.forward();
      if (!std::isfinite(loss)) throw TrainingError(epoch, "loss is not finite");
      model.backward();
      const auto& g = model.grad();
      ++step;
      if (opt.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= opt.learning_rate * g[i];
      } else {
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (std::size_t i = 0; i < theta.size(); ++i) {
          m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * g[i];
          m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * g[i] * g[i];
          theta[i] -= opt.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + kAdamEps);
        }
      }
      for (std::size_t idx : model.range_params()) theta[idx] = std::max(theta[idx], 1e-3);
    }
    if (!std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); }))
      throw TrainingError(epoch, "parameters diverged");
  }

  TrainedNet out = model.finalize(bits, samples);
  out.epochs_trained = opt.epochs;
  out.batch_size = opt.batch_size;
  out.train_seed = opt.seed;
  for (const auto& layer : out.neurons)
    for (const auto& p : layer)
      if (!std::isfinite(p.scale) || !std::isfinite(p.offset))
        throw TrainingError(opt.epochs - 1, "normalization folded to a non-finite value");
  return out;
}

}  // namespace luna
