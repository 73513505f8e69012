#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvinfer/approx_math.hpp"
#include "dvinfer/conditioning.hpp"
#include "dvinfer/model_config.hpp"
#include "dvinfer/mulaw.hpp"
#include "dvinfer/rng.hpp"
#include "dvinfer/sampling.hpp"
#include "dvinfer/weights.hpp"

namespace dvinfer {

/// Output distributions of consecutive steps, one row of `levels` per step.
struct ProbTrace {
  std::size_t steps = 0;
  std::size_t levels = 0;
  std::vector<double> data;

  ProbTrace() = default;
  ProbTrace(std::size_t n, std::size_t a) : steps(n), levels(a), data(n * a, 0.0) {}

  std::span<double> row(std::size_t t) { return {data.data() + t * levels, levels}; }
  [[nodiscard]] std::span<const double> row(std::size_t t) const { return {data.data() + t * levels, levels}; }
};

/// Largest elementwise |a - b| over two traces of equal shape.
inline double max_abs_diff(const ProbTrace& a, const ProbTrace& b) {
  if (a.steps != b.steps || a.levels != b.levels) throw std::invalid_argument("trace shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

/// The last d entries of one layer's input x^(j-1), oldest first out.
template <class T>
class RingBuffer {
 public:
  RingBuffer(std::size_t depth, std::size_t width) : depth_(depth), width_(width), data_(depth * width, T(0)) {}

  [[nodiscard]] std::size_t size() const { return depth_; }
  [[nodiscard]] std::size_t width() const { return width_; }

  /// x_{i-d}: the entry about to be overwritten.
  [[nodiscard]] std::span<const T> oldest() const { return {data_.data() + head_ * width_, width_}; }

  void push(std::span<const T> x) {
    std::copy(x.begin(), x.end(), data_.begin() + static_cast<std::ptrdiff_t>(head_ * width_));
    head_ = (head_ + 1) % depth_;
  }

  void clear() {
    std::fill(data_.begin(), data_.end(), T(0));
    head_ = 0;
  }

 private:
  std::size_t depth_;
  std::size_t width_;
  std::size_t head_ = 0;
  std::vector<T> data_;
};

/// Everything that evolves during generation.
template <class T>
struct EngineState {
  std::vector<RingBuffer<T>> rings;  // rings[j] feeds layer j+1 and holds d_{j+1} entries
  int previous_code = 0;             // y_{i-1}
  std::size_t step = 0;              // i
  CounterRng rng;
};

/// Single-threaded engine that evaluates the network exactly as written,
/// one layer and one timestep at a time, with ring buffers holding the
/// dilated history. `T` is the arithmetic type: double for the oracle
/// role, CountedScalar for FLOP instrumentation.
template <class T = double>
class ReferenceEngine {
 public:
  ReferenceEngine(const WeightSet& weights, const ModelConfig& config, ApproxPolicy policy = ApproxPolicy::Exact)
      : w_(weights), config_(config), policy_(policy) {
    config_.validate();
    check_shapes(w_, config_);
    const std::size_t r = config_.residual_channels, s = config_.skip_channels, a = config_.audio_levels;
    x_.assign(config_.num_layers + 1, std::vector<T>(r, T(0)));
    a_.assign(2 * r, T(0));
    h_.assign(r, T(0));
    q_.assign(s, T(0));
    zs_.assign(s, T(0));
    za_.assign(a, T(0));
    logits_.assign(a, T(0));
    p_.assign(a, T(0));
    for (std::size_t j = 1; j <= config_.num_layers; ++j) state_.rings.emplace_back(config_.dilation(j), r);
    reset();
  }

  /// Zero ring buffers, silence as the previous code, step 0.
  void reset(std::uint64_t seed = 0) {
    for (auto& ring : state_.rings) ring.clear();
    state_.previous_code = silence_code(static_cast<int>(config_.audio_levels));
    state_.step = 0;
    state_.rng = CounterRng(seed);
  }

  /// Consumes the current code y_i and conditioning L_t (all layers,
  /// layer-major; empty means zeros) and returns P(y_{i+1}).
  std::span<const T> step(int code, std::span<const float> conditioning = {}) {
    const std::size_t r = config_.residual_channels, s = config_.skip_channels, a = config_.audio_levels;
    if (code < 0 || static_cast<std::size_t>(code) >= a) throw std::invalid_argument("code out of range");
    if (!conditioning.empty() && conditioning.size() != config_.num_layers * 2 * r)
      throw std::invalid_argument("conditioning vector has the wrong size");

    const auto prev = static_cast<std::size_t>(state_.previous_code);
    const auto cur = static_cast<std::size_t>(code);
    for (std::size_t k = 0; k < r; ++k)
      x_[0][k] = T(w_.w_emb_prev.at(k, prev)) + T(w_.w_emb_cur.at(k, cur)) + T(w_.b_embed.data[k]);

    for (std::size_t k = 0; k < s; ++k) q_[k] = T(w_.b_skip.data[k]);

    for (std::size_t j = 0; j < config_.num_layers; ++j) {
      const auto& L = w_.layers[j];
      const std::vector<T>& x_in = x_[j];
      const std::span<const T> x_old = state_.rings[j].oldest();
      for (std::size_t k = 0; k < 2 * r; ++k) {
        T a_prev = T(0), a_cur = T(0);
        for (std::size_t c = 0; c < r; ++c) {
          a_prev += T(L.w_prev.at(k, c)) * x_old[c];
          a_cur += T(L.w_cur.at(k, c)) * x_in[c];
        }
        T v = a_prev + a_cur + T(L.bias.data[k]);
        if (!conditioning.empty()) v = v + T(conditioning[j * 2 * r + k]);
        a_[k] = v;
      }
      for (std::size_t k = 0; k < r; ++k) h_[k] = tanh_with(policy_, a_[k]) * sigmoid_with(policy_, a_[r + k]);
      for (std::size_t k = 0; k < r; ++k) {
        T acc = T(0);
        for (std::size_t c = 0; c < r; ++c) acc += T(L.w_res.at(k, c)) * h_[c];
        x_[j + 1][k] = x_in[k] + acc + T(L.b_res.data[k]);
      }
      for (std::size_t k = 0; k < s; ++k) {
        T acc = T(0);
        for (std::size_t c = 0; c < r; ++c) acc += T(L.w_skip.at(k, c)) * h_[c];
        q_[k] = q_[k] + acc;
      }
      state_.rings[j].push(x_in);
    }

    for (std::size_t k = 0; k < s; ++k) zs_[k] = relu(q_[k]);
    for (std::size_t k = 0; k < a; ++k) {
      T acc = T(0);
      for (std::size_t c = 0; c < s; ++c) acc += T(w_.w_relu.at(k, c)) * zs_[c];
      za_[k] = relu(acc + T(w_.b_relu.data[k]));
    }
    for (std::size_t k = 0; k < a; ++k) {
      T acc = T(0);
      for (std::size_t c = 0; c < a; ++c) acc += T(w_.w_out.at(k, c)) * za_[c];
      logits_[k] = acc + T(w_.b_out.data[k]);
    }
    softmax<T>(std::span<const T>(logits_), std::span<T>(p_), policy_);

    state_.previous_code = code;
    ++state_.step;
    return p_;
  }

  [[nodiscard]] const EngineState<T>& state() const { return state_; }
  EngineState<T>& state() { return state_; }
  [[nodiscard]] const ModelConfig& config() const { return config_; }

  /// x^(j) from the most recent step, j = 0..num_layers.
  [[nodiscard]] std::span<const T> residual(std::size_t j) const { return x_[j]; }

 private:
  static T relu(T v) { return v > T(0) ? v : T(0); }

  const WeightSet& w_;
  ModelConfig config_;
  ApproxPolicy policy_;
  EngineState<T> state_;
  std::vector<std::vector<T>> x_;
  std::vector<T> a_, h_, q_, zs_, za_, logits_, p_;
};

/// Autoregressive generation of n codes. The history starts as silence
/// and each sampled code is fed back as the next input.
template <class T = double>
std::vector<int> synthesize(const WeightSet& weights, const ModelConfig& config, const ConditioningSignal& conditioning,
                            std::size_t n, ApproxPolicy policy, const SamplingPolicy& sampling, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synthesize: need at least one sample");
  conditioning.check_compatible(config, n);
  ReferenceEngine<T> engine(weights, config, policy);
  engine.reset(seed);
  Sampler<T> sampler(config.audio_levels, sampling);
  std::vector<int> codes;
  codes.reserve(n);
  int code = silence_code(static_cast<int>(config.audio_levels));
  for (std::size_t t = 0; t < n; ++t) {
    const auto p = engine.step(code, conditioning.at(t));
    code = sampler.draw(p, engine.state().rng);
    codes.push_back(code);
  }
  return codes;
}

inline std::vector<int> synthesize_unconditional(const WeightSet& weights, const ModelConfig& config, std::size_t n,
                                                 ApproxPolicy policy, const SamplingPolicy& sampling,
                                                 std::uint64_t seed) {
  return synthesize(weights, config, ConditioningSignal::unconditional(n, config), n, policy, sampling, seed);
}

/// p_t for every position of a ground-truth sequence: step t consumes
/// codes[t-1] (silence for t = 0), so p_t is the prediction of codes[t].
template <class T = double>
ProbTrace teacher_forced_eval(const WeightSet& weights, const ModelConfig& config, std::span<const int> codes,
                              const ConditioningSignal& conditioning, ApproxPolicy policy) {
  if (codes.empty()) throw std::invalid_argument("teacher_forced_eval: empty code sequence");
  conditioning.check_compatible(config, codes.size());
  ReferenceEngine<T> engine(weights, config, policy);
  ProbTrace trace(codes.size(), config.audio_levels);
  int input = silence_code(static_cast<int>(config.audio_levels));
  for (std::size_t t = 0; t < codes.size(); ++t) {
    const auto p = engine.step(input, conditioning.at(t));
    for (std::size_t k = 0; k < p.size(); ++k) trace.row(t)[k] = static_cast<double>(p[k]);
    input = codes[t];
  }
  return trace;
}

}  // namespace dvinfer
