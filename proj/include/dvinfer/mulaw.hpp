#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace dvinfer {

/// Continuous mu-law (mu = 255) companding, uniformly quantized to
/// `levels` codes. Code 0 is -1.0 and code levels-1 is +1.0.
inline constexpr double kMu = 255.0;

inline int mulaw_encode(double x, int levels = 256) {
  x = std::clamp(x, -1.0, 1.0);
  const double f = std::copysign(std::log1p(kMu * std::fabs(x)) / std::log1p(kMu), x);
  const int code = static_cast<int>(std::floor((f + 1.0) * 0.5 * levels));
  return std::clamp(code, 0, levels - 1);
}

/// Midpoint of the code's companded bin, expanded back to linear amplitude.
inline double mulaw_decode(int code, int levels = 256) {
  const double f = (static_cast<double>(code) + 0.5) / levels * 2.0 - 1.0;
  return std::copysign(std::expm1(std::fabs(f) * std::log1p(kMu)) / kMu, f);
}

/// Code of a zero-amplitude sample; used to prime the generation history.
inline int silence_code(int levels = 256) { return mulaw_encode(0.0, levels); }

}  // namespace dvinfer
