#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvinfer/features.hpp"
#include "dvinfer/model_config.hpp"
#include "dvinfer/qrnn.hpp"
#include "dvinfer/weights.hpp"

namespace dvinfer {

/// Repeats every element out_rate / in_rate times. Rates that do not
/// divide are rejected; no interpolation is ever performed.
template <class T>
std::vector<T> upsample_repeat(std::span<const T> in, std::size_t in_rate, std::size_t out_rate) {
  if (in_rate == 0 || out_rate % in_rate != 0)
    throw std::invalid_argument("upsample_repeat: output rate " + std::to_string(out_rate) +
                                " is not a multiple of input rate " + std::to_string(in_rate));
  const std::size_t ratio = out_rate / in_rate;
  std::vector<T> out;
  out.reserve(in.size() * ratio);
  for (const T& v : in) out.insert(out.end(), ratio, v);
  return out;
}

/// Per-timestep, per-layer 2r bias vectors L^(j)_t. Stored at the
/// conditioning rate; timestep t reads frame t / repeat, which is
/// upsampling by repetition without materializing the audio-rate copy.
class ConditioningSignal {
 public:
  ConditioningSignal() = default;

  ConditioningSignal(std::size_t layers, std::size_t width, std::size_t repeat, std::vector<float> frames)
      : layers_(layers), width_(width), repeat_(repeat), frames_(std::move(frames)) {
    if (repeat_ == 0 || layers_ == 0 || width_ == 0 || frames_.size() % (layers_ * width_) != 0)
      throw std::invalid_argument("ConditioningSignal: inconsistent shape");
    length_ = frames_.size() / (layers_ * width_) * repeat_;
  }

  /// All-zero conditioning of `length` timesteps (unconditional "babbling").
  static ConditioningSignal unconditional(std::size_t length, std::size_t layers, std::size_t width) {
    ConditioningSignal c;
    c.layers_ = layers;
    c.width_ = width;
    c.repeat_ = 1;
    c.length_ = length;
    c.unconditional_ = true;
    c.frames_.assign(layers * width, 0.0f);
    return c;
  }

  static ConditioningSignal unconditional(std::size_t length, const ModelConfig& config) {
    return unconditional(length, config.num_layers, 2 * config.residual_channels);
  }

  [[nodiscard]] std::size_t length() const { return length_; }
  [[nodiscard]] std::size_t layers() const { return layers_; }
  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::size_t repeat() const { return repeat_; }
  [[nodiscard]] bool is_unconditional() const { return unconditional_; }
  [[nodiscard]] std::size_t frame_count() const { return frames_.size() / (layers_ * width_); }

  /// Biases of every layer at timestep t, layer-major (layers * width floats).
  [[nodiscard]] std::span<const float> at(std::size_t t) const {
    const std::size_t frame = unconditional_ ? 0 : t / repeat_;
    return {frames_.data() + frame * layers_ * width_, layers_ * width_};
  }

  /// L^(layer+1)_t, 0-indexed layer.
  [[nodiscard]] std::span<const float> at(std::size_t t, std::size_t layer) const {
    return at(t).subspan(layer * width_, width_);
  }

  /// Explicit audio-rate copy (timesteps x layers x width), for inspection.
  [[nodiscard]] std::vector<float> materialize() const {
    std::vector<float> out;
    out.reserve(length_ * layers_ * width_);
    for (std::size_t t = 0; t < length_; ++t) {
      const auto row = at(t);
      out.insert(out.end(), row.begin(), row.end());
    }
    return out;
  }

  /// Throws unless this signal fits a model with `config` and covers exactly n timesteps.
  void check_compatible(const ModelConfig& config, std::size_t n) const {
    if (layers_ != config.num_layers || width_ != 2 * config.residual_channels)
      throw std::invalid_argument("conditioning shape does not match the model");
    if (length_ != n)
      throw std::invalid_argument("conditioning covers " + std::to_string(length_) + " timesteps, expected " +
                                  std::to_string(n));
  }

 private:
  std::size_t layers_ = 0;
  std::size_t width_ = 0;
  std::size_t repeat_ = 1;
  std::size_t length_ = 0;
  bool unconditional_ = false;
  std::vector<float> frames_;
};

/// Full frontend: featurize at the conditioning rate, run the two
/// bidirectional QRNN layers, project per layer with P_cond^(j) and
/// B_cond^(j), and repeat each frame up to the audio rate.
inline ConditioningSignal build_conditioning(std::span<const PhonemeToken> phonemes, const WeightSet& weights,
                                             const ModelConfig& config, const F0Range& range = {},
                                             std::vector<std::string>* warnings = nullptr) {
  config.validate();
  FeaturizeResult feats = featurize(phonemes, range, static_cast<double>(config.conditioning_rate));
  if (warnings) warnings->insert(warnings->end(), feats.warnings.begin(), feats.warnings.end());

  Sequence x(feats.frames.size(), kLinguisticFeatureDim);
  for (std::size_t t = 0; t < feats.frames.size(); ++t)
    std::copy(feats.frames[t].begin(), feats.frames[t].end(), x.row(t).begin());
  const Sequence cond = qrnn_bidirectional(x, weights.qrnn);

  const std::size_t layers = config.num_layers, width = 2 * config.residual_channels;
  std::vector<float> frames(cond.length * layers * width);
  for (std::size_t t = 0; t < cond.length; ++t) {
    const auto c = cond.row(t);
    for (std::size_t j = 0; j < layers; ++j) {
      const Tensor& p = weights.layers[j].p_cond;
      const Tensor& b = weights.layers[j].b_cond;
      float* dst = frames.data() + (t * layers + j) * width;
      for (std::size_t k = 0; k < width; ++k) {
        double acc = b.data[k];
        for (std::size_t i = 0; i < c.size(); ++i) acc += static_cast<double>(p.at(k, i)) * c[i];
        dst[k] = static_cast<float>(acc);
      }
    }
  }
  if (frames.empty()) throw std::invalid_argument("build_conditioning: every phoneme was dropped");
  return ConditioningSignal(layers, width, config.upsample_ratio(), std::move(frames));
}

}  // namespace dvinfer
