#pragma once

#include <cstdint>
#include <span>

namespace agenttrace {

// splitmix64 finalizer. All keyed derivations in the library reduce to this
// mixer so that outputs are identical across platforms and standard-library
// implementations.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based splitmix64 generator.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept { return mix64(state_ += 0x9E3779B97F4A7C15ULL); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). bound must be nonzero. The modulo bias is
  /// below 2^-40 for every bound used here (vocabularies, cut positions).
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    return next() % bound;
  }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ (v + 0x9E3779B97F4A7C15ULL));
}

/// Digest of (watermark_id, context tokens). Seeds the context-dependent
/// vocabulary permutation; equal digests yield equal permutations.
inline std::uint64_t context_fingerprint(std::uint64_t watermark_id,
                                         std::span<const std::uint32_t> context) noexcept {
  std::uint64_t h = mix64(watermark_id ^ 0x5CA1AB1E0DDBA11ULL);
  for (std::uint32_t token : context) h = hash_combine(h, token);
  return h;
}

}  // namespace agenttrace
