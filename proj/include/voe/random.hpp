#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (key, index), so a stream can be split
// into blocks that are evaluated anywhere, in any order, and still reproduce
// the serial sequence bit for bit. Keys are derived from a top-level seed and
// a purpose label, then refined per replicate with `substream`.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace voe {

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(std::uint64_t key) : key_(mix64(key)) {}

  /// Stream for a named purpose ("bootstrap", "simulation", ...).
  static RandomStream named(std::uint64_t seed, std::string_view purpose) {
    return RandomStream(mix64(seed) ^ hash_label(purpose));
  }

  /// Independent child stream, e.g. one per replicate.
  RandomStream substream(std::uint64_t index) const {
    return RandomStream(key_ ^ mix64(index + 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }
  void seek(std::uint64_t position) noexcept { counter_ = position; }

  /// Raw 64 bits at an absolute index; does not advance the stream.
  std::uint64_t bits_at(std::uint64_t index) const noexcept {
    return mix64(key_ + (index + 1) * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t next_u64() noexcept { return bits_at(counter_++); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform index in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard Gaussian via Box-Muller; consumes exactly two counters.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace voe
