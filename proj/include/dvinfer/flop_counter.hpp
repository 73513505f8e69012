#pragma once

#include <cmath>
#include <cstdint>

namespace dvinfer {

/// Elementary operation counts. Comparisons (max, relu) count as one FLOP
/// each, divisions and exponentials are weighted by f_d and f_e.
struct FlopTally {
  std::uint64_t adds = 0;
  std::uint64_t muls = 0;
  std::uint64_t divs = 0;
  std::uint64_t exps = 0;
  std::uint64_t cmps = 0;

  [[nodiscard]] double total(double f_div, double f_exp) const {
    return static_cast<double>(adds + muls + cmps) + f_div * static_cast<double>(divs) +
           f_exp * static_cast<double>(exps);
  }

  friend bool operator==(const FlopTally&, const FlopTally&) = default;
};

/// double that reports every arithmetic operation to the active tally.
/// Instantiating an engine with this type yields an instrumented build.
class CountedScalar {
 public:
  constexpr CountedScalar() = default;
  constexpr CountedScalar(double v) : v_(v) {}  // NOLINT: implicit, like double

  [[nodiscard]] constexpr double value() const { return v_; }
  explicit constexpr operator double() const { return v_; }

  friend CountedScalar operator+(CountedScalar a, CountedScalar b) { return bump(&FlopTally::adds), a.v_ + b.v_; }
  friend CountedScalar operator-(CountedScalar a, CountedScalar b) { return bump(&FlopTally::adds), a.v_ - b.v_; }
  friend CountedScalar operator*(CountedScalar a, CountedScalar b) { return bump(&FlopTally::muls), a.v_ * b.v_; }
  friend CountedScalar operator/(CountedScalar a, CountedScalar b) { return bump(&FlopTally::divs), a.v_ / b.v_; }
  friend CountedScalar operator-(CountedScalar a) { return -a.v_; }
  CountedScalar& operator+=(CountedScalar b) { return *this = *this + b; }

  friend bool operator<(CountedScalar a, CountedScalar b) { return bump(&FlopTally::cmps), a.v_ < b.v_; }
  friend bool operator>(CountedScalar a, CountedScalar b) { return bump(&FlopTally::cmps), a.v_ > b.v_; }
  friend bool operator>=(CountedScalar a, CountedScalar b) { return bump(&FlopTally::cmps), a.v_ >= b.v_; }
  friend bool operator<=(CountedScalar a, CountedScalar b) { return bump(&FlopTally::cmps), a.v_ <= b.v_; }

  friend CountedScalar exp(CountedScalar a) { return bump(&FlopTally::exps), std::exp(a.v_); }
  friend CountedScalar approx_exp(CountedScalar a) { return exp(a); }
  // (e^x - e^-x) / (e^x + e^-x)
  friend CountedScalar tanh(CountedScalar a) {
    const CountedScalar ep = exp(a), em = exp(-a);
    (void)((ep - em) / (ep + em));
    return std::tanh(a.v_);
  }

  static FlopTally*& active() {
    thread_local FlopTally* tally = nullptr;
    return tally;
  }

 private:
  static void bump(std::uint64_t FlopTally::*field) {
    if (FlopTally* t = active()) ++(t->*field);
  }

  double v_ = 0.0;
};

/// Routes CountedScalar operations on this thread into `tally` while alive.
class ScopedFlopCount {
 public:
  explicit ScopedFlopCount(FlopTally& tally) : previous_(CountedScalar::active()) { CountedScalar::active() = &tally; }
  ~ScopedFlopCount() { CountedScalar::active() = previous_; }
  ScopedFlopCount(const ScopedFlopCount&) = delete;
  ScopedFlopCount& operator=(const ScopedFlopCount&) = delete;

 private:
  FlopTally* previous_;
};

}  // namespace dvinfer
