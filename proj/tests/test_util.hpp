#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "agenttrace/keys.hpp"
#include "agenttrace/trace.hpp"

namespace testutil {

/// Wilson-Hilferty approximation of the chi-square quantile; accurate to a
/// few percent for df >= 3, plenty for gate thresholds.
inline double chi2_quantile(double p, double df) {
  // One-sided standard normal quantiles used by the gates below.
  double z = 0.0;
  if (p >= 0.989 && p <= 0.991) {
    z = 2.3263478740408408;
  } else if (p >= 0.9989 && p <= 0.9991) {
    z = 3.090232306167813;
  } else if (p >= 0.9499 && p <= 0.9501) {
    z = 1.6448536269514722;
  } else {
    z = 2.0;
  }
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

inline constexpr double kZ999 = 3.090232306167813;  // one-sided p < 0.001

/// Trace of uniform random tokens with no watermark.
inline agenttrace::Trace random_trace(std::uint32_t vocab_size, std::size_t length,
                                      std::uint64_t seed) {
  agenttrace::Trace t;
  t.vocab_size = vocab_size;
  t.seed = seed;
  agenttrace::SplitMix64 rng(seed);
  t.tokens.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    t.tokens.push_back(static_cast<std::uint32_t>(rng.next_below(vocab_size)));
  }
  return t;
}

}  // namespace testutil
