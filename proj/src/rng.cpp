#include "fedman/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fedman/errors.hpp"

namespace fedman {

std::uint64_t mix64(std::uint64_t x) noexcept {
  // SplitMix64 finalizer.
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t key = mix64(seed_ ^ mix64(stream_ + 0x5851f42d4c957f2dULL));
  return mix64(key + 0x9e3779b97f4a7c15ULL * ++counter_);
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t bound) noexcept {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<std::size_t> sample_without_replacement(RngStream& rng, std::size_t m, std::size_t b) {
  if (b < 1 || b > m) {
    throw InvalidArgument("sample_without_replacement: need 1 <= b <= m, got b=" +
                          std::to_string(b) + ", m=" + std::to_string(m));
  }
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first b slots form a uniform b-subset.
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(b);
  return pool;
}

}  // namespace fedman
