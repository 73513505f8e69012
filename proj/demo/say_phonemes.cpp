// Conditioned synthesis: phonemes -> linguistic features -> QRNN ->
// per-layer biases -> samples.

#include <cstdio>
#include <vector>

#include "dvinfer.hpp"

using namespace dvinfer;

int main() {
  ModelConfig config = tiny_config(8, 16, 32, 256);
  const WeightSet weights = generate_random_model(config, 3);

  // "hello": HH AH0 L OW1, framed by silence
  const std::vector<PhonemeToken> text = {
      {kSilencePhoneme, 0, 0.05, false, 0.0}, {*phoneme_index("HH"), 0, 0.06, false, 0.0},
      {*phoneme_index("AH"), 0, 0.07, true, 180.0}, {*phoneme_index("L"), 0, 0.06, true, 170.0},
      {*phoneme_index("OW"), 1, 0.15, true, 150.0}, {kSilencePhoneme, 0, 0.05, false, 0.0},
  };
  std::vector<std::string> warnings;
  const ConditioningSignal cond = build_conditioning(text, weights, config, F0Range{}, &warnings);
  for (const auto& w : warnings) std::printf("warning: %s\n", w.c_str());

  const std::vector<int> codes = synthesize(weights, config, cond, cond.length(), ApproxPolicy::Approximate,
                                            SamplingPolicy::with_temperature(0.9), 11);
  std::printf("%zu conditioning frames -> %zu samples\n", cond.frame_count(), codes.size());
  double energy = 0.0;
  for (int c : codes) {
    const double x = mulaw_decode(c);
    energy += x * x;
  }
  std::printf("mean power %.4f\n", energy / static_cast<double>(codes.size()));
}
