#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvinfer {

/// Per-phoneme output of a duration/F0 predictor.
struct PhonemePrediction {
  double duration = 0.0;     // seconds
  double voiced_prob = 0.0;  // [0, 1]
  std::vector<double> f0;    // Hz, equally spaced along the phoneme
};

struct PhonemeTarget {
  double duration = 0.0;
  double voiced = 0.0;  // ground-truth voicing probability, usually 0 or 1
  std::vector<double> f0;
};

struct LossWeights {
  double voicing = 1.0;    // lambda1, cross-entropy weight
  double f0 = 1.0;         // lambda2, absolute F0 error weight
  double smoothness = 1.0; // lambda3, predicted-F0 total variation weight
};

inline constexpr double kVoicingClamp = 1e-7;

inline double binary_cross_entropy(double predicted, double target) {
  const double p = std::clamp(predicted, kVoicingClamp, 1.0 - kVoicingClamp);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

/// Mean over phonemes of
///   |t_hat - t| + l1 CE(p_hat, p) + l2 sum_t |F0_hat - F0| + l3 sum_t |F0_hat[t+1] - F0_hat[t]|.
inline double phoneme_joint_loss(std::span<const PhonemePrediction> preds, std::span<const PhonemeTarget> truth,
                                 const LossWeights& lambda) {
  if (preds.size() != truth.size()) throw std::invalid_argument("prediction and truth lengths differ");
  if (preds.empty()) throw std::invalid_argument("loss of an empty phoneme sequence");
  double total = 0.0;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    const auto& p = preds[n];
    const auto& t = truth[n];
    if (p.f0.size() != t.f0.size())
      throw std::invalid_argument("phoneme " + std::to_string(n) + ": F0 sample counts differ");
    double f0_err = 0.0, f0_tv = 0.0;
    for (std::size_t k = 0; k < p.f0.size(); ++k) f0_err += std::fabs(p.f0[k] - t.f0[k]);
    for (std::size_t k = 0; k + 1 < p.f0.size(); ++k) f0_tv += std::fabs(p.f0[k + 1] - p.f0[k]);
    total += std::fabs(p.duration - t.duration) + lambda.voicing * binary_cross_entropy(p.voiced_prob, t.voiced) +
             lambda.f0 * f0_err + lambda.smoothness * f0_tv;
  }
  return total / static_cast<double>(preds.size());
}

}  // namespace dvinfer
