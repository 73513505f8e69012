// Unconditional generation from a random model with both engines, then a
// side-by-side timing. Random weights produce noise-like "babble".

#include <chrono>
#include <cstdio>

#include "dvinfer.hpp"

using namespace dvinfer;

int main() {
  const ModelConfig config = tiny_config(20, 32, 128, 256);
  const WeightSet weights = generate_random_model(config, 42);
  const std::size_t n = config.audio_rate / 4;

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> ref = synthesize_unconditional(weights, config, n, ApproxPolicy::Exact,
                                                        SamplingPolicy::direct(), 7);
  const double ref_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ThreadPlan plan;
  plan.main_workers = 1;
  plan.aux_workers = 1;
  const PipelineResult opt = run_pipeline(weights, nullptr, config, ConditioningSignal::unconditional(n, config), n,
                                          plan, PrecisionMode::Float32, ApproxPolicy::Approximate,
                                          SamplingPolicy::direct(), 7);

  std::printf("%zu samples (%.2f s of audio)\n", n, static_cast<double>(n) / config.audio_rate);
  std::printf("reference: %8.0f samples/s\n", static_cast<double>(n) / ref_s);
  std::printf("optimized: %8.0f samples/s, %.2fx real time\n", opt.timing.samples_per_sec,
              opt.timing.speedup_over_realtime);
  std::printf("first codes:");
  for (std::size_t i = 0; i < 12; ++i) std::printf(" %d", opt.codes[i]);
  std::printf("\n");
}
