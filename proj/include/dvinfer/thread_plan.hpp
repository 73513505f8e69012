#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvinfer/matvec.hpp"
#include "dvinfer/model_config.hpp"

namespace dvinfer {

/// Two worker groups. Main workers own the gate, residual and output
/// layers; aux workers own the skip accumulation and the dilated-tap half
/// of every gate. Empty pin_cores means no pinning.
struct ThreadPlan {
  std::size_t main_workers = 1;
  std::size_t aux_workers = 1;
  std::vector<int> pin_cores;
  std::size_t cache_budget_bytes = std::size_t{1} << 20;

  [[nodiscard]] bool pinning() const { return !pin_cores.empty(); }
  [[nodiscard]] std::size_t total_workers() const { return main_workers + aux_workers; }

  /// Core for worker `index` of the main (aux = false) or aux group.
  [[nodiscard]] int core_for(bool aux, std::size_t index) const {
    const std::size_t slot = (aux ? main_workers : 0) + index;
    return pin_cores[slot % pin_cores.size()];
  }

  [[nodiscard]] std::string to_string() const {
    return std::to_string(main_workers) + "+" + std::to_string(aux_workers);
  }
};

class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CheckedPlan {
  ThreadPlan plan;
  std::vector<std::size_t> main_bytes;  // resident weight bytes per main worker
  std::vector<std::size_t> aux_bytes;
  std::vector<std::string> warnings;

  [[nodiscard]] std::size_t max_worker_bytes() const {
    std::size_t m = 0;
    for (std::size_t b : main_bytes) m = std::max(m, b);
    for (std::size_t b : aux_bytes) m = std::max(m, b);
    return m;
  }
  [[nodiscard]] std::size_t total_bytes() const {
    std::size_t n = 0;
    for (std::size_t b : main_bytes) n += b;
    for (std::size_t b : aux_bytes) n += b;
    return n;
  }
};

inline std::size_t bytes_per_weight(PrecisionMode mode) { return mode == PrecisionMode::Int16 ? 2 : 4; }

/// Rejects partitions that leave a worker without rows, and sums the
/// weights each worker streams per sample. Every autoregressive tensor is
/// counted exactly once, so the shares add up to the whole model.
inline CheckedPlan validate_plan(const ThreadPlan& plan, const ModelConfig& config,
                                 PrecisionMode mode = PrecisionMode::Float32) {
  config.validate();
  const std::size_t r = config.residual_channels, s = config.skip_channels, a = config.audio_levels;
  const std::size_t L = config.num_layers;
  if (plan.main_workers == 0) throw PlanError("thread plan needs at least one main worker");
  if (plan.aux_workers == 0) throw PlanError("thread plan needs at least one aux worker");
  if (plan.main_workers > std::min(r, a))
    throw PlanError("plan infeasible: " + std::to_string(plan.main_workers) + " main workers but only " +
                    std::to_string(std::min(r, a)) + " rows in the smallest main-group matrix");
  if (plan.aux_workers > std::min(2 * r, s))
    throw PlanError("plan infeasible: " + std::to_string(plan.aux_workers) + " aux workers but only " +
                    std::to_string(std::min(2 * r, s)) + " rows in the smallest aux-group matrix");
  for (int core : plan.pin_cores)
    if (core < 0) throw PlanError("negative core index in pin list");

  const std::size_t wb = bytes_per_weight(mode);
  CheckedPlan out{plan, {}, {}, {}};
  // Row counts: main owns r rows of each gate half (W_cur), r rows of W_res,
  // a rows of W_relu and W_out and r rows of the two embeddings; aux owns
  // 2r rows of W_prev and s rows of W_skip.
  for (std::size_t w = 0; w < plan.main_workers; ++w) {
    const std::size_t rr = partition_rows(r, plan.main_workers, w).size();
    const std::size_t ra = partition_rows(a, plan.main_workers, w).size();
    std::size_t elems = L * (2 * rr * r + 2 * rr + rr * r + rr);
    elems += 2 * rr * a + rr;
    elems += ra * s + ra + ra * a + ra;
    out.main_bytes.push_back(elems * wb);
  }
  for (std::size_t w = 0; w < plan.aux_workers; ++w) {
    const std::size_t r2 = partition_rows(2 * r, plan.aux_workers, w).size();
    const std::size_t rs = partition_rows(s, plan.aux_workers, w).size();
    out.aux_bytes.push_back((L * (r2 * r + rs * r) + rs) * wb);
  }
  auto warn = [&](const char* group, std::size_t index, std::size_t bytes) {
    if (bytes <= plan.cache_budget_bytes) return;
    std::ostringstream msg;
    msg << group << " worker " << index << " streams " << bytes << " weight bytes per sample, over the "
        << plan.cache_budget_bytes << "-byte cache budget";
    out.warnings.push_back(msg.str());
  };
  for (std::size_t w = 0; w < out.main_bytes.size(); ++w) warn("main", w, out.main_bytes[w]);
  for (std::size_t w = 0; w < out.aux_bytes.size(); ++w) warn("aux", w, out.aux_bytes[w]);
  return out;
}

}  // namespace dvinfer
