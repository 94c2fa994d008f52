#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agenttrace/embedder.hpp"
#include "agenttrace/errors.hpp"
#include "agenttrace/keys.hpp"
#include "agenttrace/trace.hpp"

namespace agenttrace {

/// Window-averaged alignment scores f(t, a), row-major over
/// (window start, agent). Values lie in [-1, 1] since phi has unit
/// amplitude.
struct ScoreField {
  std::vector<double> values;
  std::vector<std::uint64_t> window_starts;
  std::vector<std::string> agents;
  std::uint32_t window_tokens = 64;
  std::uint32_t step_tokens = 16;
  std::uint64_t trace_length = 0;

  std::size_t num_windows() const { return window_starts.size(); }
  std::size_t num_agents() const { return agents.size(); }

  double at(std::size_t window, std::size_t agent) const {
    return values[window * agents.size() + agent];
  }
  double& at(std::size_t window, std::size_t agent) {
    return values[window * agents.size() + agent];
  }

  /// Token position a window's score describes: start + floor(w / 2).
  std::uint64_t window_center(std::size_t window) const {
    return window_starts[window] + window_tokens / 2;
  }

  /// Window whose center is nearest to the token position.
  std::size_t nearest_window(std::uint64_t token_pos) const {
    const std::uint64_t half = window_tokens / 2;
    if (token_pos <= half) return 0;
    const std::uint64_t offset = token_pos - half;
    std::size_t idx = static_cast<std::size_t>((offset + step_tokens / 2) / step_tokens);
    return idx >= num_windows() ? num_windows() - 1 : idx;
  }
};

/// Alignment of the observed token at position j with agent `key`'s signal:
/// phi evaluated at the permuted index of tokens[j], with the permutation
/// recomputed from the previous n_gram - 1 observed tokens only.
inline double token_score(const Trace& trace, std::uint64_t position, const AgentKey& key,
                          PermutationCache* cache = nullptr) {
  if (position >= trace.tokens.size()) throw std::invalid_argument("position out of range");
  const std::vector<double> phi = derive_perturbation_vector(key, trace.vocab_size);
  const std::span<const std::uint32_t> history(trace.tokens.data(), position);
  const std::vector<std::uint32_t> ctx = pad_context(history, key.n_gram);
  const Permutation derived = cache ? Permutation{} : derive_permutation(key, ctx, trace.vocab_size);
  const Permutation& perm = cache ? cache->get(key, ctx, trace.vocab_size) : derived;
  return phi[perm.forward[trace.tokens[position]]];
}

/// Sliding-window score field over all window starts 0, step, 2*step, ...
/// with start + w <= T, for every agent key.
inline ScoreField window_scores(const Trace& trace, std::span<const AgentKey> keys,
                                std::uint32_t window_tokens, std::uint32_t step_tokens,
                                PermutationCache* cache = nullptr) {
  if (window_tokens < 1) throw std::invalid_argument("window_tokens must be >= 1");
  if (step_tokens < 1) throw std::invalid_argument("step_tokens must be >= 1");
  if (keys.empty()) throw std::invalid_argument("at least one agent key required");
  const std::uint64_t T = trace.tokens.size();
  if (T < window_tokens) {
    throw empty_field_error("trace shorter than one window: T=" + std::to_string(T));
  }

  ScoreField field;
  field.window_tokens = window_tokens;
  field.step_tokens = step_tokens;
  field.trace_length = T;
  for (const AgentKey& k : keys) field.agents.push_back(k.agent_id);
  for (std::uint64_t start = 0; start + window_tokens <= T; start += step_tokens) {
    field.window_starts.push_back(start);
  }
  field.values.resize(field.num_windows() * field.num_agents());

  PermutationCache local(4096);
  PermutationCache& c = cache ? *cache : local;
  std::vector<double> scores(T);
  for (std::size_t a = 0; a < keys.size(); ++a) {
    const AgentKey& key = keys[a];
    const std::vector<double> phi = derive_perturbation_vector(key, trace.vocab_size);
    for (std::uint64_t j = 0; j < T; ++j) {
      const std::span<const std::uint32_t> history(trace.tokens.data(), j);
      const std::vector<std::uint32_t> ctx = pad_context(history, key.n_gram);
      const Permutation& perm = c.get(key, ctx, trace.vocab_size);
      scores[j] = phi[perm.forward[trace.tokens[j]]];
    }
    // Window means are plain left-to-right sums so they match the mean of
    // the member token scores bit for bit.
    for (std::size_t w = 0; w < field.num_windows(); ++w) {
      const std::uint64_t s = field.window_starts[w];
      double sum = 0.0;
      for (std::uint64_t j = s; j < s + window_tokens; ++j) sum += scores[j];
      field.at(w, a) = sum / window_tokens;
    }
  }
  return field;
}

}  // namespace agenttrace
