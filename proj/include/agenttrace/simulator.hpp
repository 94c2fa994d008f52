#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agenttrace/embedder.hpp"
#include "agenttrace/keys.hpp"
#include "agenttrace/prf.hpp"
#include "agenttrace/token_source.hpp"
#include "agenttrace/trace.hpp"

namespace agenttrace {

enum class Pattern { kChain, kStarPure, kTree, kRing, kComplete };

inline std::string to_string(Pattern p) {
  switch (p) {
    case Pattern::kChain: return "chain";
    case Pattern::kStarPure: return "star_pure";
    case Pattern::kTree: return "tree";
    case Pattern::kRing: return "ring";
    case Pattern::kComplete: return "complete";
  }
  return "chain";
}

inline Pattern pattern_from_string(const std::string& s) {
  if (s == "chain") return Pattern::kChain;
  if (s == "star_pure") return Pattern::kStarPure;
  if (s == "tree") return Pattern::kTree;
  if (s == "ring") return Pattern::kRing;
  if (s == "complete") return Pattern::kComplete;
  throw std::invalid_argument("unknown topology pattern: " + s);
}

/// Speaking-schedule spec for one coordination pattern.
struct TopologySpec {
  Pattern pattern = Pattern::kChain;
  std::uint32_t agent_count = 4;
  std::uint32_t rounds = 1;
  std::uint64_t segment_min = 128;
  std::uint64_t segment_max = 384;
  std::uint64_t seed = 0;

  void validate() const {
    if (agent_count < 2) throw std::invalid_argument("agent_count must be >= 2");
    if (pattern == Pattern::kTree && agent_count < 3) {
      throw std::invalid_argument("tree pattern needs agent_count >= 3");
    }
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (segment_min < 1 || segment_max < segment_min) {
      throw std::invalid_argument("segment length range is empty");
    }
  }
};

namespace detail {

/// Speaker order for one round, as 0-based agent indices. Chain rounds
/// alternate direction so the linearized transitions stay on the path
/// edges instead of wrapping around from the last agent to the first.
inline std::vector<std::uint32_t> round_speakers(Pattern pattern, std::uint32_t k,
                                                 std::uint32_t round) {
  std::vector<std::uint32_t> order;
  switch (pattern) {
    case Pattern::kChain:
      if (round % 2 == 0) {
        for (std::uint32_t a = 0; a < k; ++a) order.push_back(a);
      } else {
        for (std::uint32_t a = k; a-- > 0;) order.push_back(a);
      }
      break;
    case Pattern::kStarPure:
      // Hub-interleaved: a1, a2, a1, a3, ..., a1, aK.
      for (std::uint32_t a = 1; a < k; ++a) {
        order.push_back(0);
        order.push_back(a);
      }
      break;
    case Pattern::kTree: {
      // Level-order balanced binary tree; the parent speaks again after
      // every child's subtree so adjacent speakers always share a tree
      // edge.
      const std::function<void(std::uint32_t)> visit = [&](std::uint32_t node) {
        order.push_back(node);
        for (std::uint32_t c = 2 * node + 1; c <= 2 * node + 2 && c < k; ++c) {
          visit(c);
          order.push_back(node);
        }
      };
      visit(0);
      break;
    }
    case Pattern::kRing:
      for (std::uint32_t a = 0; a < k; ++a) order.push_back(a);
      break;
    case Pattern::kComplete:
      for (std::uint32_t i = 0; i < k; ++i) {
        for (std::uint32_t j = i + 1; j < k; ++j) {
          order.push_back(i);
          order.push_back(j);
        }
      }
      break;
  }
  return order;
}

}  // namespace detail

/// Speaker sequence over all rounds with consecutive duplicates collapsed;
/// the ring pattern closes its cycle with a final return to the first
/// speaker.
inline std::vector<std::uint32_t> build_speaker_sequence(const TopologySpec& spec) {
  spec.validate();
  std::vector<std::uint32_t> speakers;
  for (std::uint32_t r = 0; r < spec.rounds; ++r) {
    for (std::uint32_t a : detail::round_speakers(spec.pattern, spec.agent_count, r)) {
      if (speakers.empty() || speakers.back() != a) speakers.push_back(a);
    }
  }
  if (spec.pattern == Pattern::kRing && speakers.back() != 0) speakers.push_back(0);
  return speakers;
}

/// Schedule with segment lengths drawn uniformly from
/// [segment_min, segment_max] using the spec seed.
inline GenerationSchedule build_schedule(const TopologySpec& spec,
                                         std::span<const std::string> agent_ids) {
  spec.validate();
  if (agent_ids.size() < spec.agent_count) {
    throw std::invalid_argument("not enough agent ids for the requested agent count");
  }
  const std::vector<std::uint32_t> speakers = build_speaker_sequence(spec);
  SplitMix64 rng(mix64(spec.seed ^ 0x7363686564ULL));
  GenerationSchedule schedule;
  schedule.reserve(speakers.size());
  for (std::uint32_t a : speakers) {
    const std::uint64_t span = spec.segment_max - spec.segment_min + 1;
    const std::uint64_t len = spec.segment_min + rng.next_below(span);
    schedule.push_back(ScheduleEntry{agent_ids[a], len});
  }
  return schedule;
}

inline GenerationSchedule build_schedule(const TopologySpec& spec) {
  const std::vector<std::string> ids = default_agent_ids(spec.agent_count);
  return build_schedule(spec, ids);
}

/// n_traces independent traces with seeds spec.seed, spec.seed + 1, ...;
/// ground truth comes from the per-trace schedule.
inline std::vector<Trace> synth_dataset(const TopologySpec& spec,
                                        const TokenDistributionSource& source,
                                        std::span<const AgentKey> keys, std::size_t n_traces) {
  spec.validate();
  if (keys.size() < spec.agent_count) {
    throw std::invalid_argument("keys must cover the requested agent count");
  }
  std::vector<std::string> ids;
  ids.reserve(spec.agent_count);
  for (std::uint32_t a = 0; a < spec.agent_count; ++a) ids.push_back(keys[a].agent_id);

  std::vector<Trace> traces;
  traces.reserve(n_traces);
  for (std::size_t i = 0; i < n_traces; ++i) {
    TopologySpec per_trace = spec;
    per_trace.seed = spec.seed + i;
    const GenerationSchedule schedule = build_schedule(per_trace, ids);
    traces.push_back(generate_trace(source, keys, schedule, per_trace.seed));
  }
  return traces;
}

}  // namespace agenttrace
