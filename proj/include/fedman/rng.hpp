#pragma once

#include <cstdint>
#include <vector>

namespace fedman {

/// Counter-based random stream.
///
/// Output j of stream (seed, id) is a fixed mixing function of
/// (seed, id, j), so any two streams are reproducible independently of the
/// order in which they are consumed, of threads and of the host. Normal
/// variates use Box-Muller on top of the uniform stream (std:: distributions
/// are implementation-defined and would break cross-host reproducibility).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, bound), bound > 0, by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of a tuple of integers, used to derive stream ids
/// such as (client, round, step).
std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept;

/// Domain tags keep stream ids of unrelated consumers apart.
namespace stream_tag {
inline constexpr std::uint64_t kMinibatch = 0x6d62;   // client, round, step
inline constexpr std::uint64_t kKpcaData = 0x6b64;    // client
inline constexpr std::uint64_t kLrmcFactors = 0x6c66;
inline constexpr std::uint64_t kLrmcMask = 0x6c6d;
inline constexpr std::uint64_t kInit = 0x696e;
}  // namespace stream_tag

/// b distinct indices drawn uniformly from [0, m), in draw order.
/// Throws InvalidArgument unless 1 <= b <= m.
std::vector<std::size_t> sample_without_replacement(RngStream& rng, std::size_t m, std::size_t b);

}  // namespace fedman
