#pragma once

#include <cstdint>

namespace delaydense {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so parallel partitions and replays agree bitwise.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

  std::uint64_t bits(std::uint64_t counter) const noexcept;

  // Uniform on (0, 1); never returns exactly 0 or 1.
  double uniform(std::uint64_t counter) const noexcept;

  // Standard normal via Box-Muller on counters 2k and 2k+1.
  double normal(std::uint64_t k) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace delaydense
