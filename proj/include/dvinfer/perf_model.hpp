#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "dvinfer/conditioning.hpp"
#include "dvinfer/flop_counter.hpp"
#include "dvinfer/matvec.hpp"
#include "dvinfer/model_config.hpp"
#include "dvinfer/reference_engine.hpp"
#include "dvinfer/weights.hpp"

namespace dvinfer {

/// FLOPs charged per division and per exponential.
struct CostParams {
  double f_d = 10.0;
  double f_e = 10.0;

  void validate() const {
    if (!(f_d >= 0.0) || !(f_e >= 0.0)) throw std::invalid_argument("cost parameters must be non-negative");
  }
};

/// 10r^2 + 11r + 2r(f_d + f_e): two r x r convolution taps over 2r rows,
/// the residual r x r projection, biases and the gate nonlinearities.
inline double flops_per_layer(double r, const CostParams& p = {}) {
  return 10.0 * r * r + 11.0 * r + 2.0 * r * (p.f_d + p.f_e);
}

inline double flops_per_layer(const ModelConfig& c, const CostParams& p = {}) {
  return flops_per_layer(static_cast<double>(c.residual_channels), p);
}

/// l * layer + s(2rl + 2) + a(2s + 2a + 3) + a(3 + f_d + f_e).
inline double flops_per_sample(double l, double r, double s, double a, const CostParams& p = {}) {
  return l * flops_per_layer(r, p) + s * (2.0 * r * l + 2.0) + a * (2.0 * s + 2.0 * a + 3.0) +
         a * (3.0 + p.f_d + p.f_e);
}

inline double flops_per_sample(const ModelConfig& c, const CostParams& p = {}) {
  return flops_per_sample(c.num_layers, c.residual_channels, c.skip_channels, c.audio_levels, p);
}

inline double flops_per_second(const ModelConfig& c, const CostParams& p = {}) {
  return flops_per_sample(c, p) * c.audio_rate;
}

/// Bytes of the per-sample network, which is streamed once per sample.
inline double model_bytes(const ModelConfig& c, PrecisionMode precision = PrecisionMode::Float32) {
  return static_cast<double>(autoregressive_param_count(c)) * (precision == PrecisionMode::Int16 ? 2.0 : 4.0);
}

inline double bandwidth_required(const ModelConfig& c, PrecisionMode precision = PrecisionMode::Float32) {
  return model_bytes(c, precision) * c.audio_rate;
}

struct PerfEstimate {
  double flops_per_layer = 0.0;
  double flops_per_sample = 0.0;
  double flops_per_second = 0.0;
  std::size_t param_count = 0;
  double model_bytes = 0.0;
  double bandwidth_bytes_per_sec = 0.0;
  double time_budget_per_sample = 0.0;  // seconds
  double time_budget_per_layer = 0.0;   // seconds
};

inline PerfEstimate estimate(const ModelConfig& c, const CostParams& p = {},
                             PrecisionMode precision = PrecisionMode::Float32) {
  p.validate();
  PerfEstimate e;
  e.flops_per_layer = flops_per_layer(c, p);
  e.flops_per_sample = flops_per_sample(c, p);
  e.flops_per_second = e.flops_per_sample * c.audio_rate;
  e.param_count = autoregressive_param_count(c);
  e.model_bytes = model_bytes(c, precision);
  e.bandwidth_bytes_per_sec = bandwidth_required(c, precision);
  e.time_budget_per_sample = 1.0 / c.audio_rate;
  e.time_budget_per_layer = 1.0 / (static_cast<double>(c.audio_rate) * c.num_layers);
  return e;
}

struct MachineProfile {
  double peak_flops = 77e9;        // one core, two 8-wide FMA units
  double cache_bandwidth = 140e9;  // bytes/sec
};

enum class Verdict { Comfortable, Tight, Infeasible };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Comfortable: return "comfortable";
    case Verdict::Tight: return "tight";
    case Verdict::Infeasible: return "infeasible";
  }
  return "?";
}

struct FeasibilityReport {
  double flops_fraction = 0.0;
  double bandwidth_fraction = 0.0;
  Verdict verdict = Verdict::Comfortable;
};

/// Required/available for compute and bandwidth. Infeasible when either
/// exceeds 1, tight when either is at least one half.
inline FeasibilityReport feasibility_report(const ModelConfig& c, const CostParams& p, const MachineProfile& m,
                                            PrecisionMode precision = PrecisionMode::Float32) {
  if (!(m.peak_flops > 0.0) || !(m.cache_bandwidth > 0.0))
    throw std::invalid_argument("machine profile needs positive peak FLOPs and bandwidth");
  FeasibilityReport f;
  f.flops_fraction = flops_per_second(c, p) / m.peak_flops;
  f.bandwidth_fraction = bandwidth_required(c, precision) / m.cache_bandwidth;
  const double worst = std::max(f.flops_fraction, f.bandwidth_fraction);
  f.verdict = worst > 1.0 ? Verdict::Infeasible : (worst >= 0.5 ? Verdict::Tight : Verdict::Comfortable);
  return f;
}

/// Operations actually executed by the reference engine over `samples`
/// unconditional steps, counted with CountedScalar.
inline FlopTally instrumented_flop_tally(const WeightSet& weights, const ModelConfig& config, std::size_t samples = 1,
                                        ApproxPolicy policy = ApproxPolicy::Exact) {
  ReferenceEngine<CountedScalar> engine(weights, config, policy);
  const int silence = silence_code(static_cast<int>(config.audio_levels));
  FlopTally tally;
  ScopedFlopCount scope(tally);
  for (std::size_t t = 0; t < samples; ++t) engine.step(silence);
  return tally;
}

inline double instrumented_flop_count(const WeightSet& weights, const ModelConfig& config, std::size_t samples = 1,
                                      const CostParams& p = {}) {
  return instrumented_flop_tally(weights, config, samples).total(p.f_d, p.f_e);
}

}  // namespace dvinfer
