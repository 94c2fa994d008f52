#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace agenttrace {

/// Half-open token span attributed to one agent.
struct GroundSegment {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  std::string agent_id;

  friend bool operator==(const GroundSegment&, const GroundSegment&) = default;
};

/// A token sequence with optional ground-truth segments. The only artifact
/// the detector is allowed to read.
struct Trace {
  std::uint32_t vocab_size = 0;
  std::vector<std::uint32_t> tokens;
  std::vector<GroundSegment> ground_truth;
  std::uint64_t seed = 0;

  friend bool operator==(const Trace&, const Trace&) = default;

  /// Ground-truth segments must be contiguous, cover [0, T) exactly, and
  /// carry adjacent-distinct agent ids.
  void validate() const {
    for (std::uint32_t t : tokens) {
      if (t >= vocab_size) throw std::invalid_argument("trace token out of range");
    }
    if (ground_truth.empty()) return;
    std::uint64_t cursor = 0;
    for (std::size_t i = 0; i < ground_truth.size(); ++i) {
      const auto& seg = ground_truth[i];
      if (seg.start != cursor) throw std::invalid_argument("ground-truth segments must be contiguous");
      if (seg.end <= seg.start) throw std::invalid_argument("ground-truth segment must be non-empty");
      if (i > 0 && ground_truth[i - 1].agent_id == seg.agent_id) {
        throw std::invalid_argument("adjacent ground-truth segments must have distinct agents");
      }
      cursor = seg.end;
    }
    if (cursor != tokens.size()) throw std::invalid_argument("ground-truth segments must cover the trace");
  }
};

/// Per-token agent labels from a segment cover of [0, T). Segments must be
/// sorted, contiguous and covering.
inline std::vector<std::string> labels_from_segments(std::span<const GroundSegment> segments,
                                                     std::uint64_t trace_length) {
  std::vector<std::string> labels(trace_length);
  std::uint64_t cursor = 0;
  for (const auto& seg : segments) {
    if (seg.start != cursor || seg.end > trace_length) {
      throw std::invalid_argument("segments do not cover [0, T) contiguously");
    }
    for (std::uint64_t t = seg.start; t < seg.end; ++t) labels[t] = seg.agent_id;
    cursor = seg.end;
  }
  if (cursor != trace_length) throw std::invalid_argument("segments do not cover [0, T)");
  return labels;
}

}  // namespace agenttrace
