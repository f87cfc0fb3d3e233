#include "causal/random.hpp"

#include <cmath>
#include <numbers>

namespace causal {

namespace {
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}

double Stream::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * kTwoPow53Inv;
}

double Stream::uniform_open() noexcept {
  return (static_cast<double>((*this)() >> 11) + 0.5) * kTwoPow53Inv;
}

double Stream::normal(double mean, double sd) noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Stream::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

Stream Stream::substream(std::uint64_t tag) const noexcept {
  return Stream(mix64(key_ ^ mix64(tag + 0x632be59bd9b4e019ULL)));
}

Stream derive_substream(std::uint64_t master_seed, std::uint64_t scenario_code,
                        std::uint64_t replicate_index, StreamPurpose purpose) noexcept {
  std::uint64_t k = mix64(master_seed ^ 0x5851f42d4c957f2dULL);
  k = mix64(k ^ scenario_code);
  k = mix64(k ^ replicate_index);
  k = mix64(k ^ static_cast<std::uint64_t>(purpose));
  return Stream(k);
}

}  // namespace causal
