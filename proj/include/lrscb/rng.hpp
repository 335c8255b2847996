#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lrscb {

// Counter-based random source. Every draw is a pure function of
// (seed, stream tag, counter), so any value can be regenerated without
// replaying the draws that came before it.
namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform on the open interval (0, 1) from 32 random bits.
constexpr double unit_open(std::uint32_t bits) noexcept {
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-32;
}

}  // namespace detail

enum class StreamTag : std::uint64_t {
  contexts = 1,
  noise = 2,
  exploration = 3,
  audit = 4,
  instance = 5,
};

class CounterStream {
 public:
  constexpr CounterStream() noexcept = default;
  constexpr CounterStream(std::uint64_t seed, StreamTag tag) noexcept
      : key_(detail::mix64(seed ^ detail::mix64(static_cast<std::uint64_t>(tag) * detail::kGolden))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return detail::mix64(key_ + (counter + 1) * detail::kGolden);
  }

  // Two independent uniforms on (0, 1) from one counter value.
  constexpr void uniform_pair(std::uint64_t counter, double& a, double& b) const noexcept {
    const std::uint64_t r = bits(counter);
    a = detail::unit_open(static_cast<std::uint32_t>(r));
    b = detail::unit_open(static_cast<std::uint32_t>(r >> 32));
  }

  double uniform(std::uint64_t counter) const noexcept {
    return detail::unit_open(static_cast<std::uint32_t>(bits(counter) >> 32));
  }

  // Standard normal via Box-Muller on a single counter value.
  double normal(std::uint64_t counter) const noexcept {
    double u1, u2;
    uniform_pair(counter, u1, u2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t counter, std::uint64_t n) const noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits(counter)) * n) >> 64);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_ = 0;
};

// Seed for trial `index` of an experiment with base seed `base`.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return base + index;
}

}  // namespace lrscb
