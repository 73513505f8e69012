#include <gtest/gtest.h>

#include "dvinfer/perf_model.hpp"

using namespace dvinfer;

namespace {

ModelConfig dims(std::uint32_t l, std::uint32_t r, std::uint32_t s, std::uint32_t a) {
  ModelConfig c;
  c.num_layers = l;
  c.residual_channels = r;
  c.skip_channels = s;
  c.audio_levels = a;
  return c;
}

}  // namespace

TEST(FlopModel, PerLayerAtR64) {
  EXPECT_DOUBLE_EQ(flops_per_layer(64.0), 44224.0);
  EXPECT_NEAR(flops_per_layer(64.0) / 42e3, 1.0, 0.10);
}

TEST(FlopModel, PerLayerDegenerateCases) {
  EXPECT_DOUBLE_EQ(flops_per_layer(1.0, {0.0, 0.0}), 21.0);
  EXPECT_DOUBLE_EQ(flops_per_layer(0.0), 0.0);
}

TEST(FlopModel, PerSampleAndPerSecondForFortyLayers) {
  const ModelConfig c;
  EXPECT_DOUBLE_EQ(flops_per_sample(c), 3348992.0);
  EXPECT_NEAR(flops_per_second(c) / 55e9, 1.0, 0.02);
  EXPECT_DOUBLE_EQ(flops_per_second(c), flops_per_sample(c) * 16384.0);
}

TEST(FlopModel, ZeroLayersLeavesOutputTerms) {
  const double s = 256, a = 256;
  EXPECT_DOUBLE_EQ(flops_per_sample(0, 64, s, a), s * 2 + a * (2 * s + 2 * a + 3) + a * (3 + 10 + 10));
}

TEST(FlopModel, LayerTermScalesQuadratically) {
  // the linear and nonlinearity terms pull the ratio below 4
  EXPECT_NEAR(flops_per_layer(128.0) / flops_per_layer(64.0), 170368.0 / 44224.0, 1e-12);
  const double cheap = flops_per_layer(128.0, {0.0, 0.0}) / flops_per_layer(64.0, {0.0, 0.0});
  EXPECT_GE(cheap, 3.9);
  EXPECT_LE(cheap, 4.0);
}

TEST(FlopModel, DivisionAndExpCostDifference) {
  const ModelConfig c = dims(20, 32, 128, 256);
  EXPECT_DOUBLE_EQ(flops_per_sample(c) - flops_per_sample(c, {0.0, 0.0}), 20.0 * 2 * 32 * 20 + 256.0 * 20);
}

TEST(FlopModel, MonotoneInEveryDimension) {
  CounterRng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const double l = static_cast<double>(rng.next_u64() % 60), r = static_cast<double>(rng.next_u64() % 200);
    const double s = static_cast<double>(rng.next_u64() % 400), a = static_cast<double>(rng.next_u64() % 400);
    const double base = flops_per_sample(l, r, s, a);
    ASSERT_GE(flops_per_sample(l + 1, r, s, a), base);
    ASSERT_GE(flops_per_sample(l, r + 1, s, a), base);
    ASSERT_GE(flops_per_sample(l, r, s + 1, a), base);
    ASSERT_GE(flops_per_sample(l, r, s, a + 1), base);
  }
  EXPECT_LT(flops_per_sample(dims(20, 32, 128, 256)), flops_per_sample(ModelConfig{}));
}

TEST(Bandwidth, FortyLayerModel) {
  const ModelConfig c;
  EXPECT_DOUBLE_EQ(model_bytes(c), 4.0 * 1646912);
  EXPECT_NEAR(model_bytes(c) / 6.4e6, 1.0, 0.15);
  EXPECT_NEAR(bandwidth_required(c) / 100e9, 1.0, 0.10);
}

TEST(Bandwidth, Int16HalvesAndRateScales) {
  ModelConfig c;
  EXPECT_DOUBLE_EQ(bandwidth_required(c, PrecisionMode::Int16) * 2.0, bandwidth_required(c));
  const double base = bandwidth_required(c);
  c.audio_rate = 48000;
  c.conditioning_rate = 250;
  EXPECT_DOUBLE_EQ(bandwidth_required(c), base * 48000.0 / 16384.0);
}

TEST(Estimate, BudgetsFollowTheAudioRate) {
  const PerfEstimate e = estimate(ModelConfig{});
  EXPECT_DOUBLE_EQ(e.flops_per_second, e.flops_per_sample * 16384.0);
  EXPECT_DOUBLE_EQ(e.time_budget_per_sample, 1.0 / 16384.0);
  EXPECT_DOUBLE_EQ(e.time_budget_per_layer, 1.0 / (16384.0 * 40.0));
  EXPECT_NEAR(e.time_budget_per_sample * 1e6, 61.0, 0.1);
  EXPECT_EQ(e.param_count, 1646912u);
  EXPECT_THROW(estimate(ModelConfig{}, {-1.0, 10.0}), std::invalid_argument);
}

TEST(Feasibility, OneCoreMachineIsTight) {
  const FeasibilityReport f = feasibility_report(ModelConfig{}, {}, MachineProfile{});
  EXPECT_NEAR(f.flops_fraction, 0.70, 0.10);
  EXPECT_NEAR(f.bandwidth_fraction, 0.70, 0.10);
  EXPECT_EQ(f.verdict, Verdict::Tight);
}

TEST(Feasibility, SlowMachineIsInfeasible) {
  const FeasibilityReport f = feasibility_report(ModelConfig{}, {}, MachineProfile{1e10, 140e9});
  EXPECT_GT(f.flops_fraction, 1.0);
  EXPECT_EQ(f.verdict, Verdict::Infeasible);
}

TEST(Feasibility, DoublingResourcesHalvesFractions) {
  const FeasibilityReport a = feasibility_report(ModelConfig{}, {}, MachineProfile{77e9, 140e9});
  const FeasibilityReport b = feasibility_report(ModelConfig{}, {}, MachineProfile{154e9, 280e9});
  EXPECT_DOUBLE_EQ(a.flops_fraction, 2.0 * b.flops_fraction);
  EXPECT_DOUBLE_EQ(a.bandwidth_fraction, 2.0 * b.bandwidth_fraction);
}

TEST(Feasibility, RejectsNonPositiveMachine) {
  EXPECT_THROW(feasibility_report(ModelConfig{}, {}, MachineProfile{0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(feasibility_report(ModelConfig{}, {}, MachineProfile{1.0, -1.0}), std::invalid_argument);
}

TEST(Instrumented, TinyModelWithinFifteenPercent) {
  const ModelConfig c = tiny_config(2, 4, 8, 8);
  const WeightSet w = generate_random_model(c, 1);
  const double measured = instrumented_flop_count(w, c);
  EXPECT_NEAR(measured / flops_per_sample(c), 1.0, 0.15);
}

TEST(Instrumented, PolynomialPartWithinFifteenPercent) {
  const ModelConfig c = tiny_config(2, 4, 8, 8);
  const WeightSet w = generate_random_model(c, 1);
  const CostParams free{0.0, 0.0};
  EXPECT_NEAR(instrumented_flop_count(w, c, 1, free) / flops_per_sample(c, free), 1.0, 0.15);
}

TEST(Instrumented, LinearInSampleCount) {
  const ModelConfig c = tiny_config(2, 4, 8, 8);
  const WeightSet w = generate_random_model(c, 1);
  const FlopTally one = instrumented_flop_tally(w, c, 1), two = instrumented_flop_tally(w, c, 2);
  EXPECT_EQ(two.adds, 2 * one.adds);
  EXPECT_EQ(two.muls, 2 * one.muls);
  EXPECT_EQ(two.divs, 2 * one.divs);
  EXPECT_EQ(two.exps, 2 * one.exps);
  EXPECT_EQ(two.cmps, 2 * one.cmps);
  EXPECT_DOUBLE_EQ(instrumented_flop_count(w, c, 2), 2.0 * instrumented_flop_count(w, c, 1));
}

TEST(Instrumented, CountsEachDivisionAndExponential) {
  const ModelConfig c = tiny_config(2, 4, 8, 8);
  const FlopTally t = instrumented_flop_tally(generate_random_model(c, 1), c);
  // per layer: r tanh (two exps, one div) and r sigmoids (one exp, one div); softmax: a exps and a divs
  EXPECT_EQ(t.exps, 2u * (4 * 2 + 4) + 8u);
  EXPECT_EQ(t.divs, 2u * (4 + 4) + 8u);
}
