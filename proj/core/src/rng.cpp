#include "delaydense/rng.hpp"

#include <cmath>
#include <numbers>

namespace delaydense {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const noexcept {
  std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream_ + 0x632BE59BD9B4E019ULL));
  return splitmix64(key ^ splitmix64(counter * 0xD1B54A32D192ED03ULL + 1));
}

double CounterRng::uniform(std::uint64_t counter) const noexcept {
  return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t k) const noexcept {
  double u1 = uniform(2 * k), u2 = uniform(2 * k + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace delaydense
