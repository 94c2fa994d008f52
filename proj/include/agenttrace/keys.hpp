#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <list>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "agenttrace/prf.hpp"

namespace agenttrace {

/// Reserved id used to left-pad contexts shorter than n_gram - 1. Never a
/// valid vocabulary token; it only ever feeds the context digest.
inline constexpr std::uint32_t kBeginToken = 0xFFFFFFFFu;

/// Default base for consecutively assigned watermark ids.
inline constexpr std::uint64_t kWatermarkIdBase = 42;

/// An agent identity plus the parameters of its keyed signal: the Fourier
/// order of the perturbation row, the perturbation magnitude applied at
/// generation time, and the context length of the vocabulary permutation.
struct AgentKey {
  std::string agent_id;
  std::uint64_t watermark_id = kWatermarkIdBase;
  int k_p_order = 1;
  double kappa = 2.0;
  int n_gram = 2;

  void validate() const {
    if (k_p_order < 1) throw std::invalid_argument("AgentKey.k_p_order must be >= 1");
    if (kappa < 0.0 || !std::isfinite(kappa))
      throw std::invalid_argument("AgentKey.kappa must be finite and >= 0");
    if (n_gram < 1) throw std::invalid_argument("AgentKey.n_gram must be >= 1");
  }
};

/// Unit-amplitude perturbation row: phi(u) = sin(2*pi*order*(u + 0.5)/V).
/// Sums to zero over a full period; the embedder scales it by kappa, the
/// detector reads it unscaled.
inline std::vector<double> derive_perturbation_vector(const AgentKey& key,
                                                      std::uint32_t vocab_size) {
  key.validate();
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
  std::vector<double> phi(vocab_size);
  const double scale = 2.0 * std::numbers::pi * static_cast<double>(key.k_p_order) /
                       static_cast<double>(vocab_size);
  for (std::uint32_t u = 0; u < vocab_size; ++u) {
    phi[u] = std::sin(scale * (static_cast<double>(u) + 0.5));
  }
  return phi;
}

/// A keyed bijection on [0, vocab_size).
struct Permutation {
  std::vector<std::uint32_t> forward;
  std::vector<std::uint32_t> inverse;
  std::uint64_t context_fingerprint = 0;
};

/// Keyed Fisher-Yates shuffle seeded by the (watermark_id, context) digest.
/// context must hold exactly n_gram - 1 tokens (kBeginToken pads the start
/// of a trace).
inline Permutation derive_permutation(const AgentKey& key,
                                      std::span<const std::uint32_t> context,
                                      std::uint32_t vocab_size) {
  key.validate();
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  if (context.size() != static_cast<std::size_t>(key.n_gram - 1)) {
    throw std::invalid_argument("context length must equal n_gram - 1");
  }
  Permutation p;
  p.context_fingerprint = context_fingerprint(key.watermark_id, context);
  p.forward.resize(vocab_size);
  std::iota(p.forward.begin(), p.forward.end(), 0u);
  SplitMix64 rng(p.context_fingerprint);
  for (std::uint32_t i = vocab_size - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(rng.next_below(i + 1));
    std::swap(p.forward[i], p.forward[j]);
  }
  p.inverse.resize(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) p.inverse[p.forward[i]] = i;
  return p;
}

inline std::uint32_t permute_index(const Permutation& p, std::uint32_t token_id) {
  if (token_id >= p.forward.size()) throw std::invalid_argument("token_id out of range");
  return p.forward[token_id];
}

inline std::uint32_t inverse_permute(const Permutation& p, std::uint32_t index) {
  if (index >= p.inverse.size()) throw std::invalid_argument("index out of range");
  return p.inverse[index];
}

/// LRU cache of derived permutations, keyed by (fingerprint, vocab_size).
/// Not thread-safe; use one cache per worker.
class PermutationCache {
 public:
  explicit PermutationCache(std::size_t capacity = 4096) : capacity_(capacity) {}

  const Permutation& get(const AgentKey& key, std::span<const std::uint32_t> context,
                         std::uint32_t vocab_size) {
    const std::uint64_t fp = context_fingerprint(key.watermark_id, context);
    const std::uint64_t cache_key = hash_combine(fp, vocab_size);
    if (auto it = index_.find(cache_key); it != index_.end()) {
      entries_.splice(entries_.begin(), entries_, it->second);
      return it->second->second;
    }
    entries_.emplace_front(cache_key, derive_permutation(key, context, vocab_size));
    index_[cache_key] = entries_.begin();
    if (entries_.size() > capacity_) {
      index_.erase(entries_.back().first);
      entries_.pop_back();
    }
    return entries_.front().second;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::size_t capacity_;
  std::list<std::pair<std::uint64_t, Permutation>> entries_;
  std::unordered_map<std::uint64_t, decltype(entries_)::iterator> index_;
};

/// Last (n_gram - 1) tokens of history, left-padded with kBeginToken.
inline std::vector<std::uint32_t> pad_context(std::span<const std::uint32_t> history,
                                              int n_gram) {
  const auto need = static_cast<std::size_t>(n_gram - 1);
  std::vector<std::uint32_t> ctx(need, kBeginToken);
  const std::size_t take = std::min(need, history.size());
  for (std::size_t i = 0; i < take; ++i) {
    ctx[need - take + i] = history[history.size() - take + i];
  }
  return ctx;
}

/// Keys with ids agent_ids[i] and watermark ids base, base+1, ...
inline std::vector<AgentKey> make_keys(std::span<const std::string> agent_ids,
                                       std::uint64_t base = kWatermarkIdBase,
                                       int k_p_order = 1, double kappa = 2.0,
                                       int n_gram = 2) {
  std::vector<AgentKey> keys;
  keys.reserve(agent_ids.size());
  for (std::size_t i = 0; i < agent_ids.size(); ++i) {
    keys.push_back(AgentKey{agent_ids[i], base + i, k_p_order, kappa, n_gram});
  }
  return keys;
}

/// Canonical agent ids a1..aK.
inline std::vector<std::string> default_agent_ids(std::uint32_t count) {
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint32_t i = 1; i <= count; ++i) ids.push_back("a" + std::to_string(i));
  return ids;
}

}  // namespace agenttrace
