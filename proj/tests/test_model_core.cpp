#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dvinfer/model_config.hpp"
#include "dvinfer/model_io.hpp"
#include "dvinfer/rng.hpp"
#include "dvinfer/weights.hpp"

using namespace dvinfer;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dvinfer_test_" + name)).string();
}

ModelConfig random_config(CounterRng& rng) {
  ModelConfig c;
  c.num_layers = 1 + static_cast<std::uint32_t>(rng.next_u64() % 6);
  c.residual_channels = 1 + static_cast<std::uint32_t>(rng.next_u64() % 9);
  c.skip_channels = 1 + static_cast<std::uint32_t>(rng.next_u64() % 12);
  c.audio_levels = 2 + static_cast<std::uint32_t>(rng.next_u64() % 30);
  c.dilation_cycle = 1 + static_cast<std::uint32_t>(rng.next_u64() % 5);
  c.conditioner_hidden = 1 + static_cast<std::uint32_t>(rng.next_u64() % 4);
  return c;
}

}  // namespace

TEST(ModelConfig, DilationDoublesWithinCycle) {
  ModelConfig c;
  c.dilation_cycle = 10;
  EXPECT_EQ(c.dilation(1), 1u);
  EXPECT_EQ(c.dilation(2), 2u);
  EXPECT_EQ(c.dilation(10), 512u);
  EXPECT_EQ(c.dilation(11), 1u);
  EXPECT_EQ(c.dilation(40), 512u);
}

TEST(ModelConfig, ValidationRejectsDegenerateShapes) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::initializer_list<void (*)(ModelConfig&)>{
           [](ModelConfig& m) { m.num_layers = 0; }, [](ModelConfig& m) { m.residual_channels = 0; },
           [](ModelConfig& m) { m.skip_channels = 0; }, [](ModelConfig& m) { m.audio_levels = 1; },
           [](ModelConfig& m) { m.dilation_cycle = 0; }, [](ModelConfig& m) { m.conditioning_rate = 300; }}) {
    ModelConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), std::invalid_argument);
  }
}

TEST(ReceptiveField, SingleLayer) {
  ModelConfig c = tiny_config(1);
  c.dilation_cycle = 1;
  EXPECT_EQ(receptive_field(c), 3u);
}

TEST(ReceptiveField, OneFullCycle) {
  ModelConfig c;
  c.num_layers = 10;
  EXPECT_EQ(receptive_field(c), 1025u);
}

TEST(ReceptiveField, FortyLayersAt48kHz) {
  ModelConfig c;
  EXPECT_EQ(receptive_field(c), 4094u);
  const double ms = receptive_field_seconds(c, 48000.0) * 1000.0;
  EXPECT_NEAR(ms, 85.29, 0.01);
  EXPECT_NEAR(ms / 83.0, 1.0, 0.05);
}

TEST(ParamCount, FortyLayerModelIsAboutOnePointSixMillion) {
  const ModelConfig c;
  const std::size_t n = autoregressive_param_count(c);
  EXPECT_EQ(n, 1646912u);
  EXPECT_NEAR(static_cast<double>(n) / 1.6e6, 1.0, 0.15);
  EXPECT_NEAR(static_cast<double>(n) * 4.0 / 6.4e6, 1.0, 0.15);
}

TEST(ParamCount, FormulaMatchesEnumeratedTensors) {
  CounterRng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelConfig c = random_config(rng);
    const WeightSet w = make_weight_set<Tensor>(c);
    EXPECT_EQ(count_elements(w, TensorRole::Autoregressive), autoregressive_param_count(c));
    EXPECT_EQ(count_elements(w, TensorRole::Conditioner), conditioner_param_count(c));
    EXPECT_EQ(count_elements(w), total_param_count(c));
  }
}

TEST(RandomModel, SameSeedIsBitIdentical) {
  const ModelConfig c = tiny_config(2, 4, 8, 8);
  EXPECT_EQ(generate_random_model(c, 7), generate_random_model(c, 7));
  EXPECT_FALSE(generate_random_model(c, 7) == generate_random_model(c, 8));
}

TEST(RandomModel, MinimalShapesExist) {
  ModelConfig c = tiny_config(1, 1, 1, 2);
  c.conditioner_hidden = 1;
  const WeightSet w = generate_random_model(c, 1);
  ASSERT_EQ(w.layers.size(), 1u);
  EXPECT_EQ(w.layers[0].w_prev.rows, 2u);
  EXPECT_EQ(w.layers[0].w_prev.cols, 1u);
  EXPECT_EQ(w.layers[0].w_skip.rows, 1u);
  EXPECT_EQ(w.w_emb_cur.rows, 1u);
  EXPECT_EQ(w.w_emb_cur.cols, 2u);
  EXPECT_EQ(w.w_out.rows, 2u);
  EXPECT_EQ(w.qrnn[0].forward.w_h.cols, 2 * kLinguisticFeatureDim);
  EXPECT_EQ(w.qrnn[1].backward.w_f.cols, 4u);
  EXPECT_NO_THROW(check_shapes(w, c));
}

TEST(RandomModel, ValuesWithinFanInBound) {
  const ModelConfig c = tiny_config();
  const WeightSet w = generate_random_model(c, 3);
  for (float v : w.layers[0].w_cur.data) EXPECT_LE(std::fabs(v), 1.0 / std::sqrt(8.0));
  for (float v : w.w_out.data) EXPECT_LE(std::fabs(v), 1.0 / std::sqrt(16.0));
}

TEST(Quantize, SymmetricEndpoints) {
  Tensor t(3, 1);
  t.data = {0.0f, 1.0f, -1.0f};
  const QTensor q = quantize_tensor(t);
  EXPECT_EQ(q.data, (std::vector<std::int16_t>{0, 32767, -32767}));
  EXPECT_FLOAT_EQ(q.scale, 1.0f / 32767.0f);
}

TEST(Quantize, AllZeroTensorHasUnitScale) {
  const QTensor q = quantize_tensor(Tensor(4, 4));
  EXPECT_EQ(q.scale, 1.0f);
  for (auto v : q.data) EXPECT_EQ(v, 0);
}

TEST(Quantize, RejectsNonFinite) {
  Tensor t(2, 1);
  t.data = {1.0f, NAN};
  EXPECT_THROW(quantize_tensor(t), std::invalid_argument);
}

TEST(Quantize, ErrorWithinHalfStepForRandomModels) {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const WeightSet w = generate_random_model(tiny_config(), seed);
    const QuantizedWeightSet q = quantize_weights(w);
    std::vector<const Tensor*> fs;
    std::vector<const QTensor*> qs;
    for_each_tensor(w, [&](const Tensor& t, const std::string&, TensorRole) { fs.push_back(&t); });
    for_each_tensor(q, [&](const QTensor& t, const std::string&, TensorRole) { qs.push_back(&t); });
    ASSERT_EQ(fs.size(), qs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      for (std::size_t k = 0; k < fs[i]->size(); ++k) {
        const double err = std::fabs(static_cast<double>(qs[i]->scale) * qs[i]->data[k] - fs[i]->data[k]);
        ASSERT_LE(err, qs[i]->scale / 2.0 * (1.0 + 1e-6)) << "tensor " << i << " element " << k;
      }
    }
  }
}

TEST(ModelIo, RoundTripIsBitExact) {
  const ModelConfig c = tiny_config(3, 5, 7, 9);
  const WeightSet w = generate_random_model(c, 7);
  const QuantizedWeightSet q = quantize_weights(w);
  const std::string path = temp_path("roundtrip.dvw1");
  save_model(w, c, path, &q);
  const LoadedModel m = load_model(path);
  EXPECT_EQ(m.config, c);
  EXPECT_EQ(m.weights, w);
  ASSERT_TRUE(m.quantized.has_value());
  EXPECT_EQ(*m.quantized, q);
  save_model(w, c, path);
  EXPECT_FALSE(load_model(path).quantized.has_value());
  std::filesystem::remove(path);
}

TEST(ModelIo, HeaderLayoutIsLittleEndian) {
  const ModelConfig c = tiny_config(2, 3, 4, 5);
  const std::vector<char> bytes = serialize_model(generate_random_model(c, 1), c);
  ASSERT_GE(bytes.size(), 41u);
  EXPECT_EQ(std::string(bytes.data(), 4), "DVW1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 2);   // layers
  EXPECT_EQ(bytes[12], 3);  // residual
  EXPECT_EQ(bytes[40], 0);  // has_int16
  EXPECT_EQ(bytes.size(), 41 + 4 * total_param_count(c));
}

namespace {

ModelFormatError::Kind load_error(std::vector<char> bytes) {
  try {
    deserialize_model(std::move(bytes));
  } catch (const ModelFormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a format error";
  return ModelFormatError::Kind::Io;
}

}  // namespace

TEST(ModelIo, DistinctErrors) {
  const ModelConfig c = tiny_config(2, 3, 4, 5);
  const std::vector<char> good = serialize_model(generate_random_model(c, 1), c);

  auto magic = good;
  std::copy_n("XXXX", 4, magic.begin());
  EXPECT_EQ(load_error(magic), ModelFormatError::Kind::BadMagic);

  auto version = good;
  version[4] = 2;
  EXPECT_EQ(load_error(version), ModelFormatError::Kind::VersionMismatch);

  auto more_layers = good;  // header claims 3 layers, payload holds 2
  more_layers[8] = 3;
  EXPECT_EQ(load_error(more_layers), ModelFormatError::Kind::Truncated);

  auto cut = good;
  cut.resize(cut.size() - 1);
  EXPECT_EQ(load_error(cut), ModelFormatError::Kind::Truncated);

  auto fewer_layers = good;  // header claims 1 layer: bytes left over
  fewer_layers[8] = 1;
  EXPECT_EQ(load_error(fewer_layers), ModelFormatError::Kind::ShapeMismatch);

  auto zero_layers = good;
  zero_layers[8] = 0;
  EXPECT_EQ(load_error(zero_layers), ModelFormatError::Kind::ShapeMismatch);

  auto nan = good;
  const float bad = NAN;
  std::memcpy(nan.data() + 41, &bad, 4);
  EXPECT_EQ(load_error(nan), ModelFormatError::Kind::NonFinite);
}

TEST(ModelIo, MissingFileIsIoError) {
  try {
    load_model(temp_path("does_not_exist.dvw1"));
    FAIL();
  } catch (const ModelFormatError& e) {
    EXPECT_EQ(e.kind(), ModelFormatError::Kind::Io);
  }
}

TEST(CounterRng, StreamsAreReproducibleAndDistinct) {
  CounterRng a(5), b(5), c(5, 1);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
  CounterRng u(11);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.next_uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
}
