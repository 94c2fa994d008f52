#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "agenttrace/keys.hpp"
#include "agenttrace/prf.hpp"
#include "agenttrace/token_source.hpp"
#include "agenttrace/trace.hpp"

namespace agenttrace {

/// One speaking turn of the linearized execution: agent plus token count.
struct ScheduleEntry {
  std::string agent_id;
  std::uint64_t length = 0;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

using GenerationSchedule = std::vector<ScheduleEntry>;

inline void validate_schedule(const GenerationSchedule& schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].length < 1) throw std::invalid_argument("schedule segment length must be >= 1");
    if (i > 0 && schedule[i - 1].agent_id == schedule[i].agent_id) {
      throw std::invalid_argument("consecutive schedule agents must be distinct");
    }
  }
}

/// Keyed modulation of base logits: permute the vocabulary under the
/// context-dependent key, add kappa * phi, unpermute. Equivalently
/// out[v] = logits[v] + kappa * phi[forward[v]].
inline std::vector<double> modulate_logits(std::span<const double> logits, const AgentKey& key,
                                           std::span<const std::uint32_t> history,
                                           PermutationCache* cache = nullptr) {
  const auto vocab_size = static_cast<std::uint32_t>(logits.size());
  if (vocab_size < 2) throw std::invalid_argument("logits length must be >= 2");
  const std::vector<double> phi = derive_perturbation_vector(key, vocab_size);
  const std::vector<std::uint32_t> ctx = pad_context(history, key.n_gram);
  const Permutation derived =
      cache ? Permutation{} : derive_permutation(key, ctx, vocab_size);
  const Permutation& perm = cache ? cache->get(key, ctx, vocab_size) : derived;
  std::vector<double> out(vocab_size);
  for (std::uint32_t v = 0; v < vocab_size; ++v) {
    out[v] = logits[v] + key.kappa * phi[perm.forward[v]];
  }
  return out;
}

namespace detail {

/// Per-agent generation state reused across a whole trace.
struct AgentSignal {
  const AgentKey* key;
  std::vector<double> phi;
  PermutationCache cache;

  AgentSignal(const AgentKey& k, std::uint32_t vocab_size)
      : key(&k), phi(derive_perturbation_vector(k, vocab_size)), cache(4096) {}
};

inline std::uint32_t sample_modulated(const TokenDistributionSource& source, AgentSignal& sig,
                                      std::span<const std::uint32_t> history, SplitMix64& rng) {
  const std::size_t need = source.context_need();
  std::vector<double> logits =
      source.next_logits(history.size() > need ? history.subspan(history.size() - need) : history);
  if (sig.key->kappa != 0.0) {
    const std::vector<std::uint32_t> ctx = pad_context(history, sig.key->n_gram);
    const Permutation& perm = sig.cache.get(*sig.key, ctx, source.vocab_size());
    for (std::uint32_t v = 0; v < source.vocab_size(); ++v) {
      logits[v] += sig.key->kappa * sig.phi[perm.forward[v]];
    }
  }
  return sample_logits(logits, rng);
}

}  // namespace detail

/// Autoregressively sample `length` tokens from the modulated distribution,
/// conditioning on `context` (which may be empty at the trace start).
inline std::vector<std::uint32_t> generate_segment(const TokenDistributionSource& source,
                                                   const AgentKey& key,
                                                   std::span<const std::uint32_t> context,
                                                   std::uint64_t length, std::uint64_t rng_seed) {
  if (length < 1) throw std::invalid_argument("segment length must be >= 1");
  detail::AgentSignal sig(key, source.vocab_size());
  SplitMix64 rng(rng_seed);
  std::vector<std::uint32_t> history(context.begin(), context.end());
  for (std::uint64_t i = 0; i < length; ++i) {
    history.push_back(detail::sample_modulated(source, sig, history, rng));
  }
  return {history.begin() + static_cast<std::ptrdiff_t>(context.size()), history.end()};
}

/// Concatenated per-segment generations with rolling context across
/// boundaries; ground truth is populated from the schedule.
inline Trace generate_trace(const TokenDistributionSource& source,
                            std::span<const AgentKey> keys, const GenerationSchedule& schedule,
                            std::uint64_t seed) {
  validate_schedule(schedule);
  std::unordered_map<std::string, std::size_t> key_index;
  for (std::size_t i = 0; i < keys.size(); ++i) key_index[keys[i].agent_id] = i;
  std::vector<detail::AgentSignal> signals;
  signals.reserve(keys.size());
  for (const AgentKey& k : keys) signals.emplace_back(k, source.vocab_size());

  Trace trace;
  trace.vocab_size = source.vocab_size();
  trace.seed = seed;
  SplitMix64 rng(mix64(seed ^ 0x7472616365ULL));
  for (const ScheduleEntry& entry : schedule) {
    auto it = key_index.find(entry.agent_id);
    if (it == key_index.end()) {
      throw std::invalid_argument("schedule references unknown agent: " + entry.agent_id);
    }
    const std::uint64_t start = trace.tokens.size();
    detail::AgentSignal& sig = signals[it->second];
    for (std::uint64_t i = 0; i < entry.length; ++i) {
      trace.tokens.push_back(detail::sample_modulated(source, sig, trace.tokens, rng));
    }
    trace.ground_truth.push_back(GroundSegment{start, trace.tokens.size(), entry.agent_id});
  }
  trace.validate();
  return trace;
}

}  // namespace agenttrace
