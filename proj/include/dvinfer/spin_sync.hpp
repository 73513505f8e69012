#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <new>
#include <thread>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif
#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace dvinfer {

inline constexpr std::size_t kCacheLine = 64;

inline void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
  _mm_pause();
#elif defined(__aarch64__)
  asm volatile("yield");
#endif
}

/// Busy-waits until `ready()` holds. After `spin_limit` polls it yields
/// the core on every further poll, so waiting threads that share a core
/// with the thread they wait on still make progress.
template <class Ready>
inline void spin_until(Ready&& ready, std::uint32_t spin_limit) {
  std::uint32_t polls = 0;
  while (!ready()) {
    if (polls < spin_limit) {
      cpu_relax();
      ++polls;
    } else {
      std::this_thread::yield();
    }
  }
}

/// Monotonic sequence counter on its own cache line.
struct alignas(kCacheLine) SequenceCounter {
  std::atomic<std::uint64_t> value{0};

  void publish(std::uint64_t v) { value.store(v, std::memory_order_release); }
  void arrive() { value.fetch_add(1, std::memory_order_release); }
  void wait_for(std::uint64_t target, std::uint32_t spin_limit) const {
    spin_until([&] { return value.load(std::memory_order_acquire) >= target; }, spin_limit);
  }
};

/// Centralized generation barrier; all memory written before arrival is
/// visible to every participant after it returns.
class SpinBarrier {
 public:
  explicit SpinBarrier(std::uint32_t participants, std::uint32_t spin_limit = 4096)
      : participants_(participants), spin_limit_(spin_limit) {}

  void arrive_and_wait() {
    if (participants_ <= 1) return;
    const std::uint32_t gen = generation_.load(std::memory_order_acquire);
    if (arrived_.fetch_add(1, std::memory_order_acq_rel) + 1 == participants_) {
      arrived_.store(0, std::memory_order_relaxed);
      generation_.fetch_add(1, std::memory_order_release);
      return;
    }
    spin_until([&] { return generation_.load(std::memory_order_acquire) != gen; }, spin_limit_);
  }

 private:
  alignas(kCacheLine) std::atomic<std::uint32_t> arrived_{0};
  alignas(kCacheLine) std::atomic<std::uint32_t> generation_{0};
  std::uint32_t participants_;
  std::uint32_t spin_limit_;
};

/// Best effort; returns false when the platform refuses.
inline bool pin_current_thread(int core) {
#if defined(__linux__)
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core, &set);
  return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
#else
  (void)core;
  return false;
#endif
}

}  // namespace dvinfer
