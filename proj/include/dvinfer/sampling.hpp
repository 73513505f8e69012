#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvinfer/rng.hpp"

namespace dvinfer {

struct SamplingPolicy {
  enum class Method { Direct, Temperature, Mean, Mode, TopK };

  Method method = Method::Direct;
  double temperature = 1.0;
  std::size_t k = 1;

  static SamplingPolicy direct() { return {}; }
  static SamplingPolicy with_temperature(double t) { return {Method::Temperature, t, 1}; }
  static SamplingPolicy mean() { return {Method::Mean, 1.0, 1}; }
  static SamplingPolicy mode() { return {Method::Mode, 1.0, 1}; }
  static SamplingPolicy top_k(std::size_t k) { return {Method::TopK, 1.0, k}; }

  [[nodiscard]] bool stochastic() const {
    return method == Method::Direct || method == Method::Temperature || method == Method::TopK;
  }

  void validate(std::size_t levels) const {
    if (method == Method::Temperature && !(std::isfinite(temperature) && temperature > 0.0))
      throw std::invalid_argument("temperature must be finite and positive");
    if (method == Method::TopK && (k < 1 || k > levels))
      throw std::invalid_argument("top-k needs 1 <= k <= " + std::to_string(levels) + ", got " + std::to_string(k));
  }

  /// "direct", "mean", "mode", "temp:<t>", "topk:<k>".
  static SamplingPolicy parse(const std::string& text) {
    if (text == "direct") return direct();
    if (text == "mean") return mean();
    if (text == "mode") return mode();
    if (text.rfind("temp:", 0) == 0) return with_temperature(std::stod(text.substr(5)));
    if (text.rfind("topk:", 0) == 0) return top_k(std::stoul(text.substr(5)));
    throw std::invalid_argument("unknown sampling policy '" + text + "'");
  }

  [[nodiscard]] std::string to_string() const {
    switch (method) {
      case Method::Direct: return "direct";
      case Method::Temperature: return "temp:" + std::to_string(temperature);
      case Method::Mean: return "mean";
      case Method::Mode: return "mode";
      case Method::TopK: return "topk:" + std::to_string(k);
    }
    return "?";
  }
};

/// Draws codes from output distributions. Holds its own scratch so a draw
/// never allocates. Stochastic methods consume exactly one uniform variate
/// per draw and invert the CDF over codes in ascending order.
template <class T>
class Sampler {
 public:
  Sampler(std::size_t levels, SamplingPolicy policy) : policy_(policy), weights_(levels), order_(levels) {
    policy_.validate(levels);
  }

  int draw(std::span<const T> p, CounterRng& rng) {
    const std::size_t n = p.size();
    switch (policy_.method) {
      case SamplingPolicy::Method::Mode: return argmax(p);
      case SamplingPolicy::Method::Mean: {
        double mass = 0.0, moment = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          mass += static_cast<double>(p[i]);
          moment += static_cast<double>(i) * static_cast<double>(p[i]);
        }
        const double m = std::nearbyint(moment / mass);
        return static_cast<int>(std::clamp(m, 0.0, static_cast<double>(n - 1)));
      }
      case SamplingPolicy::Method::Direct:
        for (std::size_t i = 0; i < n; ++i) weights_[i] = static_cast<double>(p[i]);
        break;
      case SamplingPolicy::Method::Temperature: {
        const double inv_t = 1.0 / policy_.temperature;
        for (std::size_t i = 0; i < n; ++i) weights_[i] = std::pow(static_cast<double>(p[i]), inv_t);
        break;
      }
      case SamplingPolicy::Method::TopK: {
        std::iota(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
        const auto keep = static_cast<std::ptrdiff_t>(policy_.k);
        std::partial_sort(order_.begin(), order_.begin() + keep, order_.begin() + static_cast<std::ptrdiff_t>(n),
                          [&](std::size_t a, std::size_t b) { return p[a] > p[b] || (p[a] == p[b] && a < b); });
        std::fill(weights_.begin(), weights_.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
        for (std::ptrdiff_t i = 0; i < keep; ++i) weights_[order_[i]] = static_cast<double>(p[order_[i]]);
        break;
      }
    }
    return inverse_cdf(n, rng.next_uniform());
  }

  [[nodiscard]] const SamplingPolicy& policy() const { return policy_; }

  /// Lowest index among the maxima.
  static int argmax(std::span<const T> p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p[i] > p[best]) best = i;
    return static_cast<int>(best);
  }

 private:
  int inverse_cdf(std::size_t n, double u) const {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weights_[i];
    const double target = u * total;
    double cum = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights_[i] <= 0.0) continue;
      cum += weights_[i];
      last_nonzero = i;
      if (target < cum) return static_cast<int>(i);
    }
    return static_cast<int>(last_nonzero);
  }

  SamplingPolicy policy_;
  std::vector<double> weights_;
  std::vector<std::size_t> order_;
};

}  // namespace dvinfer
