#ifndef PIPKIT_RNG_HPP
#define PIPKIT_RNG_HPP

#include <array>
#include <cstdint>
#include <optional>

namespace pipkit {

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

/// mix(master_seed ^ mix(index + 0x9E3779B97F4A7C15)): the master seed of
/// every child of RngStream(master_seed, index).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

/// Reproducible random stream identified by (master_seed, stream_index).
///
/// Generator: xoshiro256** (Blackman & Vigna). The 256-bit state is filled
/// by four successive SplitMix64 outputs started from
///
///     key = mix(master_seed) ^ mix(stream_index + 0x9E3779B97F4A7C15)
///
/// where mix is splitmix64_mix. Only integer arithmetic is involved, so the
/// output sequence is identical on every platform. Doubles are formed from
/// the top 53 bits. A stream is single-consumer.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  /// Child stream (mix(master_seed, stream_index), index). Does not advance *this.
  RngStream substream(std::uint64_t index) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double next_double() noexcept;
  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;

  /// Standard normal deviate, Marsaglia polar method. The paired second
  /// deviate is cached and returned by the next call.
  double next_normal() noexcept;

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::array<std::uint64_t, 4> state_{};
  std::optional<double> spare_normal_;
};

/// Deterministic in-place Fisher-Yates shuffle driven by uniform_index.
template <class Range>
void shuffle(Range& range, RngStream& rng) {
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.uniform_index(i);
    using std::swap;
    swap(range[static_cast<std::size_t>(i - 1)], range[static_cast<std::size_t>(j)]);
  }
}

}  // namespace pipkit

#endif  // PIPKIT_RNG_HPP
