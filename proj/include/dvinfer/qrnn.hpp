#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dvinfer/approx_math.hpp"
#include "dvinfer/weights.hpp"

namespace dvinfer {

/// Dense time-major sequence of feature vectors.
struct Sequence {
  std::size_t length = 0;
  std::size_t width = 0;
  std::vector<float> data;

  Sequence() = default;
  Sequence(std::size_t len, std::size_t w) : length(len), width(w), data(len * w, 0.0f) {}

  std::span<float> row(std::size_t t) { return {data.data() + t * width, width}; }
  [[nodiscard]] std::span<const float> row(std::size_t t) const { return {data.data() + t * width, width}; }
};

namespace detail {

inline float gate_preactivation(const Tensor& w, const Tensor& b, std::size_t unit, std::span<const float> prev,
                                std::span<const float> cur) {
  const float* row = w.row(unit);
  const std::size_t in = cur.size();
  double acc = b.data[unit];
  if (!prev.empty())
    for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(row[i]) * prev[i];
  for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(row[in + i]) * cur[i];
  return static_cast<float>(acc);
}

}  // namespace detail

/// One QRNN direction with fo-pooling over 2x1 convolutions:
///   h~ = tanh(W_h * x + B_h), o = sigmoid(W_o * x + B_o), f = sigmoid(W_f * x + B_f)
///   h_t = f_t h_{t-1} + (1 - f_t) h~_t,  z_t = o_t h_t,  h_0 = 0.
/// With `reverse` the recurrence runs from the last frame to the first
/// (the convolution's previous tap is then x_{t+1}); outputs stay aligned
/// with the input time axis.
inline Sequence qrnn_direction(const Sequence& x, const QrnnDirectionWeights<Tensor>& w, bool reverse) {
  const std::size_t hidden = w.w_h.rows;
  if (w.w_h.cols != 2 * x.width || w.w_o.cols != 2 * x.width || w.w_f.cols != 2 * x.width)
    throw std::invalid_argument("qrnn: gate width does not match input width");
  Sequence z(x.length, hidden);
  std::vector<float> h(hidden, 0.0f);
  for (std::size_t k = 0; k < x.length; ++k) {
    const std::size_t t = reverse ? x.length - 1 - k : k;
    std::span<const float> prev;
    if (k > 0) prev = x.row(reverse ? t + 1 : t - 1);
    const auto cur = x.row(t);
    for (std::size_t u = 0; u < hidden; ++u) {
      const float cand = exact_tanh(detail::gate_preactivation(w.w_h, w.b_h, u, prev, cur));
      const float o = exact_sigmoid(detail::gate_preactivation(w.w_o, w.b_o, u, prev, cur));
      const float f = exact_sigmoid(detail::gate_preactivation(w.w_f, w.b_f, u, prev, cur));
      h[u] = f * h[u] + (1.0f - f) * cand;
      z.row(t)[u] = o * h[u];
    }
  }
  return z;
}

/// Forward and backward directions with their channels stacked [fwd | bwd].
inline Sequence qrnn_bidirectional_layer(const Sequence& x, const QrnnLayerWeights<Tensor>& w) {
  const Sequence fwd = qrnn_direction(x, w.forward, false);
  const Sequence bwd = qrnn_direction(x, w.backward, true);
  Sequence out(x.length, fwd.width + bwd.width);
  for (std::size_t t = 0; t < x.length; ++t) {
    std::copy(fwd.row(t).begin(), fwd.row(t).end(), out.row(t).begin());
    std::copy(bwd.row(t).begin(), bwd.row(t).end(), out.row(t).begin() + static_cast<std::ptrdiff_t>(fwd.width));
  }
  return out;
}

/// Two stacked bidirectional layers; the final channels are interleaved
/// (fwd0, bwd0, fwd1, bwd1, ...) so both halves of every downstream gate
/// see both directions.
inline Sequence qrnn_bidirectional(const Sequence& x, const QrnnLayerWeights<Tensor> (&layers)[2]) {
  if (x.length == 0) return Sequence(0, 2 * layers[1].forward.w_h.rows);
  const Sequence stacked = qrnn_bidirectional_layer(qrnn_bidirectional_layer(x, layers[0]), layers[1]);
  const std::size_t half = stacked.width / 2;
  Sequence out(stacked.length, stacked.width);
  for (std::size_t t = 0; t < stacked.length; ++t)
    for (std::size_t k = 0; k < half; ++k) {
      out.row(t)[2 * k] = stacked.row(t)[k];
      out.row(t)[2 * k + 1] = stacked.row(t)[half + k];
    }
  return out;
}

}  // namespace dvinfer
