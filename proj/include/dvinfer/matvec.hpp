#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>

#include "dvinfer/weights.hpp"

namespace dvinfer {

enum class PrecisionMode { Float32, Int16 };

inline const char* to_string(PrecisionMode m) { return m == PrecisionMode::Float32 ? "float32" : "int16"; }

/// Half-open range of output rows owned by one worker.
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  [[nodiscard]] std::size_t size() const { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

/// Contiguous split of `rows` over `workers`; block sizes differ by at most one.
inline RowRange partition_rows(std::size_t rows, std::size_t workers, std::size_t index) {
  const std::size_t base = rows / workers, extra = rows % workers;
  const std::size_t begin = index * base + std::min(index, extra);
  return {begin, begin + base + (index < extra ? 1 : 0)};
}

namespace kernels {

inline constexpr std::size_t kLanes = 16;

// Eight floats; two of them hold the kLanes partial sums of one row.
using f32x8 = float __attribute__((vector_size(32)));

inline f32x8 load8(const float* p) {
  f32x8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

/// Sums the 16 partial sums pairwise (lane k += lane k + width for
/// width 8, 4, 2, 1) and adds the scalar tail.
inline float finish(f32x8 lo, f32x8 hi, float tail) {
  float acc[kLanes];
  const f32x8 sum = lo + hi;
  std::memcpy(acc, &sum, sizeof sum);
  for (std::size_t width = kLanes / 4; width > 0; width /= 2)
    for (std::size_t k = 0; k < width; ++k) acc[k] += acc[k + width];
  return acc[0] + tail;
}

/// Dot product with kLanes independent partial sums.
inline float dot(const float* __restrict w, const float* __restrict x, std::size_t n) {
  f32x8 lo = {}, hi = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    lo += load8(w + i) * load8(x + i);
    hi += load8(w + i + 8) * load8(x + i + 8);
  }
  float tail = 0.0f;
  for (; i < n; ++i) tail += w[i] * x[i];
  return finish(lo, hi, tail);
}

/// out[i] = dot(row i, x) for `rows` consecutive rows of an n-column
/// matrix. Rows go four at a time so each load of x feeds four rows;
/// every row keeps the exact summation order of dot().
inline void dot_rows(const float* __restrict w, std::size_t n, const float* __restrict x, float* __restrict out,
                     std::size_t rows) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const float* w0 = w + r * n;
    f32x8 lo[4] = {}, hi[4] = {};
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
      const f32x8 xl = load8(x + i), xh = load8(x + i + 8);
      for (std::size_t q = 0; q < 4; ++q) {
        lo[q] += load8(w0 + q * n + i) * xl;
        hi[q] += load8(w0 + q * n + i + 8) * xh;
      }
    }
    for (std::size_t q = 0; q < 4; ++q) {
      float tail = 0.0f;
      for (std::size_t j = i; j < n; ++j) tail += w0[q * n + j] * x[j];
      out[r + q] = finish(lo[q], hi[q], tail);
    }
  }
  for (; r < rows; ++r) out[r] = dot(w + r * n, x, n);
}

/// int16 x int16 products summed in int32 (compiles to pmaddwd-style code).
inline std::int32_t dot(const std::int16_t* __restrict w, const std::int16_t* __restrict x, std::size_t n) {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<std::int32_t>(w[i]) * static_cast<std::int32_t>(x[i]);
  return acc;
}

/// Largest activation magnitude for an n-column int16 product that cannot
/// overflow the int32 accumulator: n * 32767 * limit <= INT32_MAX.
constexpr std::int32_t activation_limit(std::size_t n) {
  const std::int64_t bound = static_cast<std::int64_t>(INT32_MAX) / (32767 * static_cast<std::int64_t>(n == 0 ? 1 : n));
  return static_cast<std::int32_t>(std::min<std::int64_t>(32767, bound));
}

/// Dynamic symmetric quantization of an activation vector into `out`.
/// Returns the scale (value ~= scale * q).
inline float quantize_activations(std::span<const float> x, std::span<std::int16_t> out, std::int32_t limit) {
  if (limit < 1) throw std::invalid_argument("int16 path: input too wide for an int32 accumulator");
  float max_abs = 0.0f;
  for (float v : x) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0f) {
    std::fill_n(out.begin(), x.size(), std::int16_t{0});
    return 1.0f;
  }
  const float scale = max_abs / static_cast<float>(limit);
  const float inv = static_cast<float>(limit) / max_abs;
  const auto lim = static_cast<float>(limit);
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<std::int16_t>(std::clamp(std::nearbyint(x[i] * inv), -lim, lim));
  return scale;
}

}  // namespace kernels

/// out[block] = W[block, :] x (+ bias[block]).
inline void matvec_blocked(const Tensor& w, std::span<const float> x, std::span<float> out, RowRange block,
                           std::span<const float> bias = {}) {
  if (x.size() != w.cols || out.size() != w.rows || block.end > w.rows || block.begin > block.end ||
      (!bias.empty() && bias.size() != w.rows))
    throw std::invalid_argument("matvec_blocked: shape mismatch");
  for (std::size_t row = block.begin; row < block.end; ++row)
    out[row] = kernels::dot(w.row(row), x.data(), w.cols) + (bias.empty() ? 0.0f : bias[row]);
}

/// Int16 variant: x is quantized into `scratch` with a per-call scale,
/// products accumulate in int32, then one float rescale per row.
inline void matvec_blocked(const QTensor& w, std::span<const float> x, std::span<float> out, RowRange block,
                           std::span<std::int16_t> scratch, std::span<const float> bias = {}) {
  if (x.size() != w.cols || out.size() != w.rows || block.end > w.rows || block.begin > block.end ||
      scratch.size() < w.cols || (!bias.empty() && bias.size() != w.rows))
    throw std::invalid_argument("matvec_blocked: shape mismatch");
  const float sx = kernels::quantize_activations(x, scratch, kernels::activation_limit(w.cols));
  const float rescale = sx * w.scale;
  for (std::size_t row = block.begin; row < block.end; ++row)
    out[row] = static_cast<float>(kernels::dot(w.row(row), scratch.data(), w.cols)) * rescale +
               (bias.empty() ? 0.0f : bias[row]);
}

}  // namespace dvinfer
