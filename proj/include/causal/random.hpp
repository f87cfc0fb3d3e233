#pragma once

#include <cstdint>
#include <limits>

namespace causal {

// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based random stream. Draw k (0-based) of a stream with key K is
//
//   mix64(K + (k + 1) * 0x9e3779b97f4a7c15)    (mod 2^64)
//
// which is the SplitMix64 sequence seeded with K. Every other quantity is
// derived from those raw words with the conversions documented below, so a
// second implementation can reproduce draws exactly.
class Stream {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  // (word >> 11) * 2^-53, in [0, 1).
  double uniform() noexcept;
  // ((word >> 11) + 0.5) * 2^-53, in (0, 1).
  double uniform_open() noexcept;
  // Box-Muller cosine branch: one open uniform u1 then one uniform u2,
  // mean + sd * sqrt(-2 ln u1) * cos(2 pi u2). No caching of the sine branch.
  double normal(double mean, double sd) noexcept;
  // uniform() < p.
  bool bernoulli(double p) noexcept { return uniform() < p; }
  // Unbiased integer in [0, n) by Lemire's multiply-and-reject method.
  std::uint64_t below(std::uint64_t n) noexcept;

  // Independent child stream; the parent position is not consumed.
  // Child key = mix64(K ^ mix64(tag + 0x632be59bd9b4e019)).
  Stream substream(std::uint64_t tag) const noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Purpose tags keep the streams of one replicate apart.
enum class StreamPurpose : std::uint64_t {
  Data = 1,
  Bootstrap = 2,
  Oracle = 3,
};

// Key = mix64(mix64(mix64(mix64(master ^ 0x5851f42d4c957f2d) ^ scenario)
//                    ^ replicate) ^ purpose).
Stream derive_substream(std::uint64_t master_seed, std::uint64_t scenario_code,
                        std::uint64_t replicate_index, StreamPurpose purpose) noexcept;

}  // namespace causal
