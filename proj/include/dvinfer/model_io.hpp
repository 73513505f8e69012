#pragma once

// DVW1 weight file (all integers and floats little-endian):
//
//   bytes 0-3   magic "DVW1"
//   u32         version (1)
//   u32 x 8     num_layers, residual, skip, levels, dilation_cycle,
//               audio_rate, conditioning_rate, conditioner_hidden
//   u8          has_int16
//   f32[]       every tensor, row-major, in for_each_tensor order
//   if has_int16, for every tensor in the same order:
//     f32       scale
//     i16[]     quantized values, row-major
//
// Shapes are not stored; they follow from the header fields.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvinfer/model_config.hpp"
#include "dvinfer/weights.hpp"

namespace dvinfer {

inline constexpr std::array<char, 4> kDvw1Magic = {'D', 'V', 'W', '1'};
inline constexpr std::uint32_t kDvw1Version = 1;

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, VersionMismatch, Truncated, ShapeMismatch, NonFinite };

  ModelFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct LoadedModel {
  ModelConfig config;
  WeightSet weights;
  std::optional<QuantizedWeightSet> quantized;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  [[nodiscard]] const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (static_cast<std::uint16_t>(u8()) << 8));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n)
      throw ModelFormatError(ModelFormatError::Kind::Truncated,
                             "DVW1 file truncated at byte " + std::to_string(pos_) + " (needed " + std::to_string(n) +
                                 " more bytes)");
  }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<char> serialize_model(const WeightSet& weights, const ModelConfig& config,
                                         const QuantizedWeightSet* quantized = nullptr) {
  check_shapes(weights, config);
  detail::ByteWriter w;
  w.raw(kDvw1Magic.data(), kDvw1Magic.size());
  w.u32(kDvw1Version);
  for (std::uint32_t v : {config.num_layers, config.residual_channels, config.skip_channels, config.audio_levels,
                          config.dilation_cycle, config.audio_rate, config.conditioning_rate,
                          config.conditioner_hidden})
    w.u32(v);
  w.u8(quantized ? 1 : 0);
  for_each_tensor(weights, [&](const Tensor& t, const std::string&, TensorRole) {
    for (float v : t.data) w.f32(v);
  });
  if (quantized) {
    for_each_tensor(*quantized, [&](const QTensor& t, const std::string&, TensorRole) {
      w.f32(t.scale);
      for (std::int16_t v : t.data) w.u16(static_cast<std::uint16_t>(v));
    });
  }
  return w.bytes();
}

inline LoadedModel deserialize_model(std::vector<char> bytes) {
  using Kind = ModelFormatError::Kind;
  detail::ByteReader in(std::move(bytes));
  std::array<char, 4> magic{};
  for (char& c : magic) c = static_cast<char>(in.u8());
  if (magic != kDvw1Magic)
    throw ModelFormatError(Kind::BadMagic, "not a DVW1 file (magic '" + std::string(magic.data(), 4) + "')");
  const std::uint32_t version = in.u32();
  if (version != kDvw1Version)
    throw ModelFormatError(Kind::VersionMismatch, "unsupported DVW1 version " + std::to_string(version));

  LoadedModel m;
  for (std::uint32_t* field : {&m.config.num_layers, &m.config.residual_channels, &m.config.skip_channels,
                               &m.config.audio_levels, &m.config.dilation_cycle, &m.config.audio_rate,
                               &m.config.conditioning_rate, &m.config.conditioner_hidden})
    *field = in.u32();
  const std::uint8_t has_int16 = in.u8();
  if (has_int16 > 1) throw ModelFormatError(Kind::ShapeMismatch, "has_int16 flag must be 0 or 1");
  try {
    m.config.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(Kind::ShapeMismatch, e.what());
  }

  m.weights = make_weight_set<Tensor>(m.config);
  for_each_tensor(m.weights, [&](Tensor& t, const std::string& name, TensorRole) {
    in.need(t.size() * 4);
    for (float& v : t.data) {
      v = in.f32();
      if (!std::isfinite(v)) throw ModelFormatError(Kind::NonFinite, "non-finite value in tensor " + name);
    }
  });
  if (has_int16) {
    m.quantized = make_weight_set<QTensor>(m.config);
    for_each_tensor(*m.quantized, [&](QTensor& t, const std::string&, TensorRole) {
      in.need(4 + t.size() * 2);
      t.scale = in.f32();
      for (std::int16_t& v : t.data) v = static_cast<std::int16_t>(in.u16());
    });
  }
  if (in.remaining() != 0)
    throw ModelFormatError(Kind::ShapeMismatch, std::to_string(in.remaining()) +
                                                    " trailing bytes after the tensors declared by the header");
  return m;
}

inline void save_model(const WeightSet& weights, const ModelConfig& config, const std::string& path,
                       const QuantizedWeightSet* quantized = nullptr) {
  const std::vector<char> bytes = serialize_model(weights, config, quantized);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError(ModelFormatError::Kind::Io, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelFormatError(ModelFormatError::Kind::Io, "write to " + path + " failed");
}

inline LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError(ModelFormatError::Kind::Io, "cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(std::move(bytes));
}

}  // namespace dvinfer
