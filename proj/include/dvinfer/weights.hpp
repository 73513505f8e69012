#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvinfer/model_config.hpp"
#include "dvinfer/rng.hpp"

namespace dvinfer {

/// Row-major float32 matrix; vectors are stored with cols == 1.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  [[nodiscard]] const float* row(std::size_t r) const { return data.data() + r * cols; }
  [[nodiscard]] std::span<const float> values() const { return data; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Symmetric per-tensor int16 quantization: value ~= scale * q.
struct QTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  float scale = 1.0f;
  std::vector<std::int16_t> data;

  QTensor() = default;
  QTensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] const std::int16_t* row(std::size_t r) const { return data.data() + r * cols; }
  [[nodiscard]] float dequantized(std::size_t i) const { return scale * static_cast<float>(data[i]); }

  friend bool operator==(const QTensor&, const QTensor&) = default;
};

template <class T>
struct LayerWeights {
  T w_prev;  // 2r x r, applied to x_{t-d}
  T w_cur;   // 2r x r, applied to x_t
  T bias;    // 2r
  T w_res;   // r x r
  T b_res;   // r
  T w_skip;  // s x r
  T p_cond;  // 2r x 2h, conditioner channels -> layer bias
  T b_cond;  // 2r

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

/// One direction of a QRNN layer. Gate matrices are h x 2*in: the first
/// `in` columns multiply x_{t-1}, the last `in` columns multiply x_t.
template <class T>
struct QrnnDirectionWeights {
  T w_h, w_o, w_f;
  T b_h, b_o, b_f;

  friend bool operator==(const QrnnDirectionWeights&, const QrnnDirectionWeights&) = default;
};

template <class T>
struct QrnnLayerWeights {
  QrnnDirectionWeights<T> forward;
  QrnnDirectionWeights<T> backward;

  friend bool operator==(const QrnnLayerWeights&, const QrnnLayerWeights&) = default;
};

/// Every learned tensor of the autoregressive net and the conditioner.
/// Instantiated with Tensor (canonical float32) and QTensor (int16 shadow).
template <class T>
struct BasicWeightSet {
  std::vector<LayerWeights<T>> layers;
  T w_emb_prev;  // r x a
  T w_emb_cur;   // r x a
  T b_embed;     // r
  T b_skip;      // s
  T w_relu;      // a x s
  T b_relu;      // a
  T w_out;       // a x a
  T b_out;       // a
  QrnnLayerWeights<T> qrnn[2];

  friend bool operator==(const BasicWeightSet&, const BasicWeightSet&) = default;
};

using WeightSet = BasicWeightSet<Tensor>;
using QuantizedWeightSet = BasicWeightSet<QTensor>;

/// Which part of the model a tensor belongs to (used for byte accounting).
enum class TensorRole { Autoregressive, Conditioner };

/// Visits every tensor in the canonical roster order, which is also the
/// on-disk order: layers ascending (w_prev, w_cur, bias, w_res, b_res,
/// w_skip, p_cond, b_cond), then the global tensors, then the QRNN stack.
/// `fn(tensor, name, role)` receives a (const) reference.
template <class Set, class Fn>
void for_each_tensor(Set& w, Fn&& fn) {
  for (std::size_t j = 0; j < w.layers.size(); ++j) {
    auto& L = w.layers[j];
    const std::string p = "layer" + std::to_string(j + 1) + ".";
    fn(L.w_prev, p + "w_prev", TensorRole::Autoregressive);
    fn(L.w_cur, p + "w_cur", TensorRole::Autoregressive);
    fn(L.bias, p + "bias", TensorRole::Autoregressive);
    fn(L.w_res, p + "w_res", TensorRole::Autoregressive);
    fn(L.b_res, p + "b_res", TensorRole::Autoregressive);
    fn(L.w_skip, p + "w_skip", TensorRole::Autoregressive);
    fn(L.p_cond, p + "p_cond", TensorRole::Conditioner);
    fn(L.b_cond, p + "b_cond", TensorRole::Conditioner);
  }
  fn(w.w_emb_prev, "w_emb_prev", TensorRole::Autoregressive);
  fn(w.w_emb_cur, "w_emb_cur", TensorRole::Autoregressive);
  fn(w.b_embed, "b_embed", TensorRole::Autoregressive);
  fn(w.b_skip, "b_skip", TensorRole::Autoregressive);
  fn(w.w_relu, "w_relu", TensorRole::Autoregressive);
  fn(w.b_relu, "b_relu", TensorRole::Autoregressive);
  fn(w.w_out, "w_out", TensorRole::Autoregressive);
  fn(w.b_out, "b_out", TensorRole::Autoregressive);
  for (int q = 0; q < 2; ++q) {
    for (int dir = 0; dir < 2; ++dir) {
      auto& d = dir == 0 ? w.qrnn[q].forward : w.qrnn[q].backward;
      const std::string p = "qrnn" + std::to_string(q + 1) + (dir == 0 ? ".fwd." : ".bwd.");
      fn(d.w_h, p + "w_h", TensorRole::Conditioner);
      fn(d.w_o, p + "w_o", TensorRole::Conditioner);
      fn(d.w_f, p + "w_f", TensorRole::Conditioner);
      fn(d.b_h, p + "b_h", TensorRole::Conditioner);
      fn(d.b_o, p + "b_o", TensorRole::Conditioner);
      fn(d.b_f, p + "b_f", TensorRole::Conditioner);
    }
  }
}

/// Allocates a zero-filled set whose shapes match `config`.
template <class T>
BasicWeightSet<T> make_weight_set(const ModelConfig& config) {
  config.validate();
  const std::size_t r = config.residual_channels, s = config.skip_channels, a = config.audio_levels;
  const std::size_t h = config.conditioner_hidden;
  BasicWeightSet<T> w;
  w.layers.resize(config.num_layers);
  for (auto& L : w.layers) {
    L.w_prev = T(2 * r, r);
    L.w_cur = T(2 * r, r);
    L.bias = T(2 * r, 1);
    L.w_res = T(r, r);
    L.b_res = T(r, 1);
    L.w_skip = T(s, r);
    L.p_cond = T(2 * r, 2 * h);
    L.b_cond = T(2 * r, 1);
  }
  w.w_emb_prev = T(r, a);
  w.w_emb_cur = T(r, a);
  w.b_embed = T(r, 1);
  w.b_skip = T(s, 1);
  w.w_relu = T(a, s);
  w.b_relu = T(a, 1);
  w.w_out = T(a, a);
  w.b_out = T(a, 1);
  const std::size_t inputs[2] = {kLinguisticFeatureDim, 2 * h};
  for (int q = 0; q < 2; ++q) {
    for (auto* d : {&w.qrnn[q].forward, &w.qrnn[q].backward}) {
      d->w_h = T(h, 2 * inputs[q]);
      d->w_o = T(h, 2 * inputs[q]);
      d->w_f = T(h, 2 * inputs[q]);
      d->b_h = T(h, 1);
      d->b_o = T(h, 1);
      d->b_f = T(h, 1);
    }
  }
  return w;
}

template <class Set>
std::size_t count_elements(const Set& w) {
  std::size_t n = 0;
  for_each_tensor(w, [&](const auto& t, const std::string&, TensorRole) { n += t.size(); });
  return n;
}

template <class Set>
std::size_t count_elements(const Set& w, TensorRole role) {
  std::size_t n = 0;
  for_each_tensor(w, [&](const auto& t, const std::string&, TensorRole r) {
    if (r == role) n += t.size();
  });
  return n;
}

/// Throws std::invalid_argument when any tensor's shape disagrees with `config`.
inline void check_shapes(const WeightSet& w, const ModelConfig& config) {
  WeightSet expected = make_weight_set<Tensor>(config);
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for_each_tensor(expected, [&](const Tensor& t, const std::string&, TensorRole) { shapes.emplace_back(t.rows, t.cols); });
  if (w.layers.size() != config.num_layers) throw std::invalid_argument("weight set has wrong layer count");
  std::size_t i = 0;
  for_each_tensor(w, [&](const Tensor& t, const std::string& name, TensorRole) {
    if (t.rows != shapes[i].first || t.cols != shapes[i].second || t.data.size() != t.rows * t.cols)
      throw std::invalid_argument("tensor " + name + " has shape " + std::to_string(t.rows) + "x" +
                                  std::to_string(t.cols) + ", expected " + std::to_string(shapes[i].first) + "x" +
                                  std::to_string(shapes[i].second));
    ++i;
  });
}

/// Deterministic random model: each tensor is filled from its own counter
/// stream with U(-1/sqrt(fan_in), 1/sqrt(fan_in)); fan_in is the column
/// count for matrices and the producing matrix's fan-in for biases.
inline WeightSet generate_random_model(const ModelConfig& config, std::uint64_t seed) {
  WeightSet w = make_weight_set<Tensor>(config);
  const std::size_t r = config.residual_channels, s = config.skip_channels, a = config.audio_levels;
  std::uint64_t stream = 0;
  std::size_t last_fan_in = 1;
  for_each_tensor(w, [&](Tensor& t, const std::string& name, TensorRole) {
    const bool matrix = name.find("w_") != std::string::npos || name.find("p_cond") != std::string::npos;
    std::size_t fan_in = matrix ? t.cols : last_fan_in;
    if (name == "b_embed") fan_in = a;
    if (name == "b_skip") fan_in = r * config.num_layers;
    if (name == "b_relu") fan_in = s;
    last_fan_in = fan_in;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    CounterRng rng(seed, stream++);
    for (float& v : t.data) v = static_cast<float>(rng.next_uniform(-bound, bound));
  });
  return w;
}

inline QTensor quantize_tensor(const Tensor& t) {
  QTensor q(t.rows, t.cols);
  float max_abs = 0.0f;
  for (float v : t.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("cannot quantize a non-finite weight");
    max_abs = std::max(max_abs, std::fabs(v));
  }
  q.scale = max_abs > 0.0f ? max_abs / 32767.0f : 1.0f;
  const double inv = 1.0 / static_cast<double>(q.scale);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const double scaled = std::nearbyint(static_cast<double>(t.data[i]) * inv);
    q.data[i] = static_cast<std::int16_t>(std::clamp(scaled, -32767.0, 32767.0));
  }
  return q;
}

inline QuantizedWeightSet quantize_weights(const WeightSet& w) {
  QuantizedWeightSet q;
  q.layers.resize(w.layers.size());
  std::vector<QTensor> flat;
  for_each_tensor(w, [&](const Tensor& t, const std::string&, TensorRole) { flat.push_back(quantize_tensor(t)); });
  std::size_t i = 0;
  for_each_tensor(q, [&](QTensor& t, const std::string&, TensorRole) { t = std::move(flat[i++]); });
  return q;
}

}  // namespace dvinfer
