#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dvinfer/approx_math.hpp"
#include "dvinfer/conditioning.hpp"
#include "dvinfer/matvec.hpp"
#include "dvinfer/model_config.hpp"
#include "dvinfer/mulaw.hpp"
#include "dvinfer/reference_engine.hpp"
#include "dvinfer/rng.hpp"
#include "dvinfer/sampling.hpp"
#include "dvinfer/spin_sync.hpp"
#include "dvinfer/thread_plan.hpp"
#include "dvinfer/weights.hpp"

namespace dvinfer {

struct PipelineOptions {
  /// Busy-wait each aux worker for this long before it prepares the next
  /// step's dilated taps. Used to show that the overlap is real.
  std::chrono::nanoseconds aux_stall{0};
  /// When non-empty, step t consumes teacher_codes[t-1] instead of the
  /// sampled code (step 0 always consumes silence).
  std::span<const int> teacher_codes;
  /// When set, must be sized (n, audio_levels); receives every p_t.
  ProbTrace* record = nullptr;
};

struct TimingReport {
  ModelConfig config;
  std::size_t main_workers = 0;
  std::size_t aux_workers = 0;
  PrecisionMode precision = PrecisionMode::Float32;
  ApproxPolicy policy = ApproxPolicy::Exact;
  std::size_t samples = 0;
  std::uint64_t wall_ns = 0;
  double samples_per_sec = 0.0;
  double speedup_over_realtime = 0.0;
  bool pin_requested = false;
  bool pinned = false;

  /// One key=value pair per line.
  [[nodiscard]] std::string to_key_value() const {
    std::ostringstream out;
    out << "layers=" << config.num_layers << "\nresidual=" << config.residual_channels
        << "\nskip=" << config.skip_channels << "\nlevels=" << config.audio_levels
        << "\naudio_rate=" << config.audio_rate << "\nplan=" << main_workers << "+" << aux_workers
        << "\nprecision=" << to_string(precision) << "\napprox=" << to_string(policy) << "\nsamples=" << samples
        << "\nwall_ns=" << wall_ns << "\nsamples_per_sec=" << samples_per_sec
        << "\nspeedup_over_realtime=" << speedup_over_realtime << "\npinned=" << (pinned ? "true" : "false")
        << "\n";
    return out.str();
  }
};

struct PipelineResult {
  std::vector<int> codes;
  TimingReport timing;
};

/// Multithreaded generator. A main group computes the embedding, the
/// current-tap half of every gate, the gate nonlinearity, the residual
/// path and the output layers; an aux group accumulates the skip sum and
/// precomputes the dilated-tap half of every gate for the next step while
/// the main group finishes the current one. The groups meet only through
/// per-stage sequence counters. Not reentrant.
class PipelineEngine {
 public:
  PipelineEngine(const WeightSet& weights, const ModelConfig& config, ThreadPlan plan,
                 PrecisionMode precision = PrecisionMode::Float32, ApproxPolicy policy = ApproxPolicy::Exact,
                 const QuantizedWeightSet* quantized = nullptr)
      : w_(weights), q_(quantized), config_(config), checked_(validate_plan(plan, config, precision)),
        precision_(precision), policy_(policy) {
    check_shapes(w_, config_);
    if (precision_ == PrecisionMode::Int16 && q_ == nullptr)
      throw std::invalid_argument("int16 precision needs a quantized weight set");
    const std::size_t r = config_.residual_channels, s = config_.skip_channels, a = config_.audio_levels;
    const std::size_t L = config_.num_layers;
    for (std::size_t j = 0; j < L; ++j) {
      depth_.push_back(config_.dilation(j + 1) + 1);
      rings_.emplace_back(depth_.back() * r, 0.0f);
    }
    a_prev_.assign(L, std::vector<float>(2 * r, 0.0f));
    h_.assign(L, std::vector<float>(r, 0.0f));
    gate_.assign(2 * r, 0.0f);
    q_acc_.assign(s, 0.0f);
    skip_tmp_.assign(s, 0.0f);
    zs_.assign(s, 0.0f);
    za_.assign(a, 0.0f);
    logits_.assign(a, 0.0f);
    p_.assign(a, 0.0f);
    const std::size_t widest = std::max({r, s, a});
    scratch_.assign(plan.total_workers(), std::vector<std::int16_t>(widest, 0));
    aprev_done_ = std::make_unique<SequenceCounter[]>(L);
    h_ready_ = std::make_unique<SequenceCounter[]>(L);
  }

  [[nodiscard]] const CheckedPlan& plan() const { return checked_; }
  [[nodiscard]] const ModelConfig& config() const { return config_; }

  /// Dilated-history depth kept for layer `j` (1-indexed): d_j.
  [[nodiscard]] std::size_t history_depth(std::size_t j) const { return depth_[j - 1] - 1; }

  PipelineResult run(const ConditioningSignal& conditioning, std::size_t n, const SamplingPolicy& sampling,
                     std::uint64_t seed, const PipelineOptions& options = {}) {
    if (n < 1) throw std::invalid_argument("run_pipeline: need at least one sample");
    conditioning.check_compatible(config_, n);
    if (!options.teacher_codes.empty() && options.teacher_codes.size() < n - 1)
      throw std::invalid_argument("teacher code sequence shorter than the run");
    if (options.record && (options.record->steps != n || options.record->levels != config_.audio_levels))
      throw std::invalid_argument("probability trace has the wrong shape");
    for (int c : options.teacher_codes)
      if (c < 0 || static_cast<std::size_t>(c) >= config_.audio_levels)
        throw std::invalid_argument("teacher code out of range");

    Sampler<float> sampler(config_.audio_levels, sampling);
    reset_state();
    cond_ = &conditioning;
    opts_ = &options;
    sampler_ = &sampler;
    rng_ = CounterRng(seed);
    n_ = n;
    PipelineResult result;
    result.codes.resize(n);
    codes_ = result.codes.data();

    const ThreadPlan& plan = checked_.plan;
    const std::size_t M = plan.main_workers, K = plan.aux_workers;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    spin_limit_ = plan.total_workers() > hw ? 16 : 4096;
    SpinBarrier start(static_cast<std::uint32_t>(M + K), spin_limit_);
    SpinBarrier main_barrier(static_cast<std::uint32_t>(M), spin_limit_);
    main_barrier_ = &main_barrier;
    start_ = &start;
    std::atomic<int> pin_failures{0};

    std::vector<std::thread> threads;
    threads.reserve(M + K);
    for (std::size_t w = 0; w < K; ++w)
      threads.emplace_back([this, w, &pin_failures] {
        pin(true, w, pin_failures);
        aux_worker(w);
      });
    for (std::size_t w = 1; w < M; ++w)
      threads.emplace_back([this, w, &pin_failures] {
        pin(false, w, pin_failures);
        main_worker(w);
      });
    pin(false, 0, pin_failures);
    main_worker(0);
    for (auto& t : threads) t.join();

    TimingReport& rep = result.timing;
    rep.config = config_;
    rep.main_workers = M;
    rep.aux_workers = K;
    rep.precision = precision_;
    rep.policy = policy_;
    rep.samples = n;
    rep.wall_ns = wall_ns_;
    const double seconds = static_cast<double>(std::max<std::uint64_t>(wall_ns_, 1)) * 1e-9;
    rep.samples_per_sec = static_cast<double>(n) / seconds;
    rep.speedup_over_realtime = (static_cast<double>(n) / config_.audio_rate) / seconds;
    rep.pin_requested = plan.pinning();
    rep.pinned = plan.pinning() && pin_failures.load() == 0;
    return result;
  }

 private:
  void pin(bool aux, std::size_t index, std::atomic<int>& failures) const {
    const ThreadPlan& plan = checked_.plan;
    if (plan.pinning() && !pin_current_thread(plan.core_for(aux, index))) failures.fetch_add(1);
  }

  void reset_state() {
    for (auto& ring : rings_) std::fill(ring.begin(), ring.end(), 0.0f);
    for (std::size_t j = 0; j < config_.num_layers; ++j) {
      aprev_done_[j].value.store(0, std::memory_order_relaxed);
      h_ready_[j].value.store(0, std::memory_order_relaxed);
    }
    zs_done_.value.store(0, std::memory_order_relaxed);
    published_.value.store(0, std::memory_order_relaxed);
    input_code_ = silence_code(static_cast<int>(config_.audio_levels));
  }

  /// Slot of timestep `time` (may be negative) in a ring of `depth` entries.
  static std::size_t slot(std::ptrdiff_t time, std::size_t depth) {
    const auto d = static_cast<std::ptrdiff_t>(depth);
    return static_cast<std::size_t>(((time % d) + d) % d);
  }

  float* x_at(std::size_t layer, std::ptrdiff_t time) {
    return rings_[layer].data() + slot(time, depth_[layer]) * config_.residual_channels;
  }

  /// Prepares x for repeated row dots against `w`; returns the activation
  /// scale in int16 mode.
  float prepare(std::span<const float> x, std::size_t worker) {
    if (precision_ == PrecisionMode::Float32) return 1.0f;
    return kernels::quantize_activations(x, scratch_[worker], kernels::activation_limit(x.size()));
  }

  float row_dot(const Tensor& wf, const QTensor& wq, std::size_t row, const float* x, std::size_t worker,
                float sx) const {
    if (precision_ == PrecisionMode::Float32) return kernels::dot(wf.row(row), x, wf.cols);
    return static_cast<float>(kernels::dot(wq.row(row), scratch_[worker].data(), wq.cols)) * (sx * wq.scale);
  }

  /// out[k] = W[k, :] x for k in `block`; x must have been prepare()d.
  void rows(const Tensor& wf, const QTensor* wq, RowRange block, const float* x, float* out, std::size_t worker,
            float sx) const {
    if (precision_ == PrecisionMode::Float32) {
      kernels::dot_rows(wf.row(block.begin), wf.cols, x, out + block.begin, block.size());
      return;
    }
    for (std::size_t k = block.begin; k < block.end; ++k) out[k] = row_dot(wf, *wq, k, x, worker, sx);
  }

  void main_worker(std::size_t w) {
    const std::size_t r = config_.residual_channels, a = config_.audio_levels;
    const std::size_t L = config_.num_layers, M = checked_.plan.main_workers, K = checked_.plan.aux_workers;
    const RowRange rb = partition_rows(r, M, w);
    const RowRange ab = partition_rows(a, M, w);
    const bool int16 = precision_ == PrecisionMode::Int16;
    const bool leader = w == 0;
    const std::size_t scratch_id = w;

    start_->arrive_and_wait();
    const auto t0 = std::chrono::steady_clock::now();

    for (std::size_t t = 0; t < n_; ++t) {
      if (t > 0 && !leader) published_.wait_for(t, spin_limit_);
      const auto ti = static_cast<std::ptrdiff_t>(t);
      const auto prev = static_cast<std::size_t>(previous_code_for(t));
      const auto cur = static_cast<std::size_t>(input_code_);
      const std::span<const float> cond = cond_->at(t);

      float* x0 = x_at(0, ti);
      for (std::size_t k = rb.begin; k < rb.end; ++k)
        x0[k] = w_.w_emb_prev.at(k, prev) + w_.w_emb_cur.at(k, cur) + w_.b_embed.data[k];
      main_barrier_->arrive_and_wait();

      for (std::size_t j = 0; j < L; ++j) {
        const auto& lw = w_.layers[j];
        const QTensor* lq = int16 ? &q_->layers[j].w_cur : nullptr;
        const float* x = x_at(j, ti);
        const float sx = prepare({x, r}, scratch_id);
        float* g = gate_.data();
        rows(lw.w_cur, lq, rb, x, g, scratch_id, sx);
        rows(lw.w_cur, lq, {r + rb.begin, r + rb.end}, x, g, scratch_id, sx);
        aprev_done_[j].wait_for(K * (t + 1), spin_limit_);
        const float* ap = a_prev_[j].data();
        const float* lc = cond.data() + j * 2 * r;
        float* h = h_[j].data();
        for (std::size_t k = rb.begin; k < rb.end; ++k) {
          const float u = g[k] + ap[k] + lw.bias.data[k] + lc[k];
          const float v = g[r + k] + ap[r + k] + lw.bias.data[r + k] + lc[r + k];
          h[k] = tanh_with(policy_, u) * sigmoid_with(policy_, v);
        }
        main_barrier_->arrive_and_wait();
        if (leader) h_ready_[j].publish(t + 1);
        if (j + 1 == L) break;  // x^(L) feeds nothing

        const float sh = prepare({h, r}, scratch_id);
        float* xn = x_at(j + 1, ti);
        float* res = gate_.data();
        rows(lw.w_res, int16 ? &q_->layers[j].w_res : nullptr, rb, h, res, scratch_id, sh);
        for (std::size_t k = rb.begin; k < rb.end; ++k) xn[k] = x[k] + res[k] + lw.b_res.data[k];
        main_barrier_->arrive_and_wait();
      }

      zs_done_.wait_for(K * (t + 1), spin_limit_);
      const float sz = prepare(zs_, scratch_id);
      rows(w_.w_relu, int16 ? &q_->w_relu : nullptr, ab, zs_.data(), za_.data(), scratch_id, sz);
      for (std::size_t k = ab.begin; k < ab.end; ++k) {
        const float v = za_[k] + w_.b_relu.data[k];
        za_[k] = v > 0.0f ? v : 0.0f;
      }
      main_barrier_->arrive_and_wait();
      const float sa = prepare(za_, scratch_id);
      rows(w_.w_out, int16 ? &q_->w_out : nullptr, ab, za_.data(), logits_.data(), scratch_id, sa);
      for (std::size_t k = ab.begin; k < ab.end; ++k) logits_[k] += w_.b_out.data[k];
      main_barrier_->arrive_and_wait();

      if (leader) {
        softmax<float>(logits_, p_, policy_);
        if (opts_->record)
          for (std::size_t k = 0; k < a; ++k) opts_->record->row(t)[k] = static_cast<double>(p_[k]);
        const int code = sampler_->draw(p_, rng_);
        codes_[t] = code;
        last_code_ = input_code_;
        const auto& teacher = opts_->teacher_codes;
        input_code_ = t < teacher.size() ? teacher[t] : code;
        published_.publish(t + 1);
      }
    }
    if (leader)
      wall_ns_ = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count());
  }

  /// y_{t-1}: the code consumed by the previous step (silence at t = 0).
  int previous_code_for(std::size_t t) const {
    return t == 0 ? silence_code(static_cast<int>(config_.audio_levels)) : last_code_;
  }

  void stall() const {
    if (opts_->aux_stall.count() <= 0) return;
    const auto until = std::chrono::steady_clock::now() + opts_->aux_stall;
    while (std::chrono::steady_clock::now() < until) cpu_relax();
  }

  /// W_prev x_{t-d} for every layer, into a_prev, for timestep t.
  void prepare_taps(std::size_t w, std::ptrdiff_t t, RowRange block) {
    const std::size_t r = config_.residual_channels;
    const bool int16 = precision_ == PrecisionMode::Int16;
    const std::size_t scratch_id = checked_.plan.main_workers + w;
    for (std::size_t j = 0; j < config_.num_layers; ++j) {
      const auto d = static_cast<std::ptrdiff_t>(depth_[j] - 1);
      const float* x = x_at(j, t - d);
      const float sx = prepare({x, r}, scratch_id);
      rows(w_.layers[j].w_prev, int16 ? &q_->layers[j].w_prev : nullptr, block, x, a_prev_[j].data(), scratch_id,
           sx);
      aprev_done_[j].arrive();
    }
  }

  void aux_worker(std::size_t w) {
    const std::size_t r = config_.residual_channels, s = config_.skip_channels;
    const std::size_t L = config_.num_layers, K = checked_.plan.aux_workers;
    const RowRange sb = partition_rows(s, K, w);
    const RowRange pb = partition_rows(2 * r, K, w);
    const bool int16 = precision_ == PrecisionMode::Int16;
    const std::size_t scratch_id = checked_.plan.main_workers + w;

    start_->arrive_and_wait();
    prepare_taps(w, 0, pb);

    for (std::size_t t = 0; t < n_; ++t) {
      for (std::size_t k = sb.begin; k < sb.end; ++k) q_acc_[k] = w_.b_skip.data[k];
      for (std::size_t j = 0; j < L; ++j) {
        h_ready_[j].wait_for(t + 1, spin_limit_);
        const float* h = h_[j].data();
        const float sh = prepare({h, r}, scratch_id);
        float* tmp = skip_tmp_.data();
        rows(w_.layers[j].w_skip, int16 ? &q_->layers[j].w_skip : nullptr, sb, h, tmp, scratch_id, sh);
        for (std::size_t k = sb.begin; k < sb.end; ++k) q_acc_[k] += tmp[k];
      }
      for (std::size_t k = sb.begin; k < sb.end; ++k) zs_[k] = q_acc_[k] > 0.0f ? q_acc_[k] : 0.0f;
      zs_done_.arrive();
      if (t + 1 == n_) break;
      stall();
      prepare_taps(w, static_cast<std::ptrdiff_t>(t + 1), pb);
    }
  }

  const WeightSet& w_;
  const QuantizedWeightSet* q_;
  ModelConfig config_;
  CheckedPlan checked_;
  PrecisionMode precision_;
  ApproxPolicy policy_;

  std::vector<std::size_t> depth_;              // d_j + 1 slots per layer input
  std::vector<std::vector<float>> rings_;       // rings_[j] holds x^(j), the input of layer j+1
  std::vector<std::vector<float>> a_prev_;      // W_prev x_{t-d} per layer
  std::vector<std::vector<float>> h_;           // gated activations per layer
  std::vector<float> gate_, q_acc_, skip_tmp_, zs_, za_, logits_, p_;
  std::vector<std::vector<std::int16_t>> scratch_;

  std::unique_ptr<SequenceCounter[]> aprev_done_;
  std::unique_ptr<SequenceCounter[]> h_ready_;
  SequenceCounter zs_done_;
  SequenceCounter published_;

  // Per-run state, written before the workers start.
  const ConditioningSignal* cond_ = nullptr;
  const PipelineOptions* opts_ = nullptr;
  Sampler<float>* sampler_ = nullptr;
  SpinBarrier* main_barrier_ = nullptr;
  SpinBarrier* start_ = nullptr;
  CounterRng rng_;
  std::size_t n_ = 0;
  int* codes_ = nullptr;
  int input_code_ = 0;
  int last_code_ = 0;
  std::uint32_t spin_limit_ = 4096;
  std::uint64_t wall_ns_ = 0;
};

/// One-shot convenience wrapper.
inline PipelineResult run_pipeline(const WeightSet& weights, const QuantizedWeightSet* quantized,
                                   const ModelConfig& config, const ConditioningSignal& conditioning, std::size_t n,
                                   const ThreadPlan& plan, PrecisionMode precision, ApproxPolicy policy,
                                   const SamplingPolicy& sampling, std::uint64_t seed,
                                   const PipelineOptions& options = {}) {
  PipelineEngine engine(weights, config, plan, precision, policy, quantized);
  return engine.run(conditioning, n, sampling, seed, options);
}

}  // namespace dvinfer
