#pragma once

#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace dvinfer {

// approx_exp assembles a binary32 bit pattern by hand.
static_assert(std::numeric_limits<float>::is_iec559 && sizeof(float) == 4 && sizeof(std::uint32_t) == 4,
              "approx_exp requires IEEE-754 binary32 floats");

/// Selects exact library nonlinearities or the rational approximations.
/// One policy applies to every nonlinearity of a run.
enum class ApproxPolicy { Exact, Approximate };

inline const char* to_string(ApproxPolicy p) { return p == ApproxPolicy::Exact ? "exact" : "approx"; }

/// Quartic stand-in for e^|x|: 1 + |x| + 0.5658 x^2 + 0.143 x^4.
template <class T>
constexpr T e_tilde(T x) {
  const T ax = x < T(0) ? -x : x;
  const T x2 = x * x;
  return T(1) + ax + T(0.5658) * x2 + T(0.143) * x2 * x2;
}

/// sign(x) * (e - 1/e) / (e + 1/e) with e = e_tilde(x). Odd, bounded by 1.
template <class T>
constexpr T approx_tanh(T x) {
  const T e = e_tilde(x);
  const T inv = T(1) / e;
  const T r = (e - inv) / (e + inv);
  return x < T(0) ? -r : r;
}

/// e/(1+e) for x >= 0 and 1/(1+e) for x < 0, written as 1 - s and s with
/// the same s so that sigmoid(x) + sigmoid(-x) == 1 in floating point.
template <class T>
constexpr T approx_sigmoid(T x) {
  const T s = T(1) / (T(1) + e_tilde(x));
  return x >= T(0) ? T(1) - s : s;
}

/// e^x = 2^(x / ln 2), built directly as a binary32 bit pattern. With
/// x' = x / ln 2 and z = x' - floor(x'), the pattern is
/// (x' + 126 + g(z)) * 2^23 where g(z) ~ 2^z - z is a rational fit.
/// The integer and fractional parts are assembled separately so the
/// mantissa keeps full precision. Accurate for x <= 0; returns 0 once the
/// biased exponent would underflow.
inline float approx_exp(float x) {
  constexpr float kLog2e = 1.44269504088896341f;
  const float xp = x * kLog2e;
  if (!(xp >= -126.0f)) return 0.0f;  // also maps NaN to 0
  if (xp >= 128.0f) return std::numeric_limits<float>::infinity();
  const float whole = std::floor(xp);
  const float z = xp - whole;
  const float g = -4.7259162f + 27.7280233f / (4.84252568f - z) - 1.49012907f * z;
  float frac = z + g - 1.0f;  // 2^z - 1, the mantissa fraction
  frac = frac < 0.0f ? 0.0f : (frac >= 1.0f ? 0x1.fffffep-1f : frac);
  const auto exponent = static_cast<std::uint32_t>(static_cast<std::int32_t>(whole) + 127);
  const auto mantissa = static_cast<std::uint32_t>(frac * 8388608.0f);
  return std::bit_cast<float>((exponent << 23) | mantissa);
}

template <std::floating_point T>
T approx_exp(T x) {
  return static_cast<T>(approx_exp(static_cast<float>(x)));
}

template <class T>
T exact_tanh(T x) {
  using std::tanh;
  return tanh(x);
}

template <class T>
T exact_sigmoid(T x) {
  using std::exp;
  return T(1) / (T(1) + exp(-x));
}

template <class T>
T exact_exp(T x) {
  using std::exp;
  return exp(x);
}

template <class T>
T tanh_with(ApproxPolicy p, T x) {
  return p == ApproxPolicy::Approximate ? approx_tanh(x) : exact_tanh(x);
}

template <class T>
T sigmoid_with(ApproxPolicy p, T x) {
  return p == ApproxPolicy::Approximate ? approx_sigmoid(x) : exact_sigmoid(x);
}

template <class T>
T exp_with(ApproxPolicy p, T x) {
  return p == ApproxPolicy::Approximate ? approx_exp(x) : exact_exp(x);
}

/// Numerically stable softmax into `out` (same length as `in`): subtract
/// the max, exponentiate, divide by the sum.
template <class T>
void softmax(std::span<const T> in, std::span<T> out, ApproxPolicy p) {
  if (in.empty()) throw std::invalid_argument("softmax of an empty vector");
  if (out.size() != in.size()) throw std::invalid_argument("softmax output size mismatch");
  T m = in[0];
  for (std::size_t i = 1; i < in.size(); ++i)
    if (in[i] > m) m = in[i];
  T sum = T(0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = exp_with(p, in[i] - m);
    sum = sum + out[i];
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = out[i] / sum;
}

template <class T>
std::vector<T> softmax(std::span<const T> in, ApproxPolicy p) {
  std::vector<T> out(in.size());
  softmax<T>(in, std::span<T>(out), p);
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& in, ApproxPolicy p) {
  return softmax<double>(std::span<const double>(in), p);
}

}  // namespace dvinfer
