#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dvinfer {

/// Width of one linguistic feature frame (voicing, log-F0, 5 x (40 + 5) one-hots).
inline constexpr std::size_t kLinguisticFeatureDim = 227;

/// Architecture hyperparameters of the autoregressive network and its
/// conditioner. Every tensor shape in a WeightSet is a function of this.
struct ModelConfig {
  std::uint32_t num_layers = 40;
  std::uint32_t residual_channels = 64;
  std::uint32_t skip_channels = 256;
  std::uint32_t audio_levels = 256;
  std::uint32_t dilation_cycle = 10;
  std::uint32_t audio_rate = 16384;
  std::uint32_t conditioning_rate = 256;
  std::uint32_t conditioner_hidden = 128;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

  /// Dilation of layer `layer` (1-indexed): 2^((layer - 1) mod cycle).
  [[nodiscard]] std::size_t dilation(std::size_t layer) const {
    return std::size_t{1} << ((layer - 1) % dilation_cycle);
  }

  [[nodiscard]] std::size_t upsample_ratio() const { return audio_rate / conditioning_rate; }

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid model config: " + what); };
    if (num_layers < 1) fail("num_layers must be >= 1");
    if (residual_channels < 1) fail("residual_channels must be >= 1");
    if (skip_channels < 1) fail("skip_channels must be >= 1");
    if (audio_levels < 2) fail("audio_levels must be >= 2");
    if (dilation_cycle < 1 || dilation_cycle > 30) fail("dilation_cycle must be in [1, 30]");
    if (conditioner_hidden < 1) fail("conditioner_hidden must be >= 1");
    if (conditioning_rate < 1 || audio_rate < 1) fail("rates must be positive");
    if (audio_rate % conditioning_rate != 0) fail("audio_rate must be a multiple of conditioning_rate");
  }
};

/// Small config used throughout the tests: every matrix is a few rows wide.
inline ModelConfig tiny_config(std::uint32_t layers = 4, std::uint32_t residual = 8, std::uint32_t skip = 16,
                               std::uint32_t levels = 16) {
  ModelConfig c;
  c.num_layers = layers;
  c.residual_channels = residual;
  c.skip_channels = skip;
  c.audio_levels = levels;
  c.conditioner_hidden = 4;
  return c;
}

/// Number of past input samples that can influence one prediction:
/// the 2x1 input convolution sees two samples and every layer adds d_j.
inline std::size_t receptive_field(const ModelConfig& config) {
  std::size_t r = 2;
  for (std::size_t j = 1; j <= config.num_layers; ++j) r += config.dilation(j);
  return r;
}

inline double receptive_field_seconds(const ModelConfig& config, double sample_rate) {
  return static_cast<double>(receptive_field(config)) / sample_rate;
}

/// Parameters of the per-sample autoregressive network (what is streamed
/// from cache once per generated sample).
inline std::size_t autoregressive_param_count(const ModelConfig& c) {
  const std::size_t r = c.residual_channels, s = c.skip_channels, a = c.audio_levels;
  const std::size_t per_layer = 2 * r * r + 2 * r * r + 2 * r + r * r + r + s * r;
  return c.num_layers * per_layer + 2 * r * a + r + s + a * s + a + a * a + a;
}

/// Parameters of the QRNN conditioner plus the per-layer conditioning projections.
inline std::size_t conditioner_param_count(const ModelConfig& c, std::size_t feature_dim = kLinguisticFeatureDim) {
  const std::size_t h = c.conditioner_hidden, r = c.residual_channels;
  // one direction = three gates, each a 2x1 convolution plus bias
  auto direction = [h](std::size_t in) { return 3 * (h * 2 * in + h); };
  const std::size_t qrnn = 2 * direction(feature_dim) + 2 * direction(2 * h);
  const std::size_t projection = c.num_layers * (2 * r * 2 * h + 2 * r);
  return qrnn + projection;
}

inline std::size_t total_param_count(const ModelConfig& c) {
  return autoregressive_param_count(c) + conditioner_param_count(c);
}

}  // namespace dvinfer
