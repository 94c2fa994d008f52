#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agenttrace/corruption.hpp"
#include "agenttrace/errors.hpp"
#include "agenttrace/keys.hpp"
#include "agenttrace/scorer.hpp"
#include "agenttrace/segmenter.hpp"
#include "agenttrace/transition_graph.hpp"

namespace agenttrace {

/// Detector configuration; defaults are the standard operating point.
struct DetectorParams {
  std::uint32_t window_tokens = 64;
  std::uint32_t step_tokens = 16;
  int smooth_win = 5;
  BoundaryParams boundary;
  int confidence_h = 4;
};

struct DetectionResult {
  ScoreField field;
  MarginSeries margin;
  SegmentAttribution attribution;
  TransitionGraph graph;
};

/// Full detection pass over a trace: score, find and refine boundaries,
/// attribute segments, and build the transition graph.
inline DetectionResult run_detection(const Trace& trace, std::span<const AgentKey> keys,
                                     const DetectorParams& params = {},
                                     PermutationCache* cache = nullptr) {
  DetectionResult result;
  result.field = window_scores(trace, keys, params.window_tokens, params.step_tokens, cache);
  result.margin = competitive_margin(result.field, params.smooth_win);
  std::vector<std::uint64_t> boundary_tokens;
  for (std::size_t w : detect_boundary_windows(result.margin, params.boundary)) {
    const std::size_t refined = refine_boundary(result.margin, w, params.boundary.local_radius);
    boundary_tokens.push_back(boundary_token(result.field, refined));
  }
  result.attribution = attribute(result.field, boundary_tokens);
  result.graph = build_transition_graph(result.field, result.attribution, params.confidence_h);
  return result;
}

/// True when the best per-window score clears the null calibration for a
/// comfortable share of windows. Unwatermarked token streams stay far
/// below 4 sigma of the null window distribution.
inline bool signal_present(const ScoreField& field) {
  const double null_sd = 1.0 / std::sqrt(2.0 * static_cast<double>(field.window_tokens));
  std::vector<double> best(field.num_windows());
  for (std::size_t w = 0; w < field.num_windows(); ++w) {
    double b = field.at(w, 0);
    for (std::size_t a = 1; a < field.num_agents(); ++a) b = std::max(b, field.at(w, a));
    best[w] = b;
  }
  std::nth_element(best.begin(), best.begin() + best.size() / 10, best.end(),
                   std::greater<double>());
  const double q90 = best[best.size() / 10];
  return q90 >= 4.0 * null_sd;
}

/// Reconstruct agent names (and, when the recovered segmentation matches
/// the turn count, turn boundaries) of a corrupted token log from its
/// watermarks alone. Throws unrestorable_error when no agent signal clears
/// the null calibration.
inline StructuredLog restore(const StructuredLog& corrupted, std::span<const AgentKey> keys,
                             const DetectorParams& params = {},
                             PermutationCache* cache = nullptr) {
  corrupted.validate();
  if (corrupted.vocab_size < 2) throw std::invalid_argument("log vocab_size must be >= 2");

  Trace stream;
  stream.vocab_size = corrupted.vocab_size;
  for (const Turn& t : corrupted.turns) {
    stream.tokens.insert(stream.tokens.end(), t.tokens.begin(), t.tokens.end());
  }
  if (stream.tokens.size() < params.window_tokens) {
    throw unrestorable_error("log content shorter than one detection window");
  }

  DetectionResult detection = run_detection(stream, keys, params, cache);
  if (!signal_present(detection.field)) {
    throw unrestorable_error("no agent signal above the null calibration");
  }

  StructuredLog restored = corrupted;
  const auto& segments = detection.attribution.segments;
  if (segments.size() == corrupted.turns.size()) {
    // Re-cut turn contents at the recovered boundaries.
    for (std::size_t i = 0; i < segments.size(); ++i) {
      restored.turns[i].tokens.assign(
          stream.tokens.begin() + static_cast<std::ptrdiff_t>(segments[i].start),
          stream.tokens.begin() + static_cast<std::ptrdiff_t>(segments[i].end));
      if (restored.turns[i].role == Role::kAssistant) {
        restored.turns[i].name = segments[i].agent_id;
      }
    }
    return restored;
  }

  // Turn counts differ: keep the corrupted cuts and name each turn by the
  // majority recovered label over its span.
  const std::vector<std::string> labels =
      labels_from_segments(detection.attribution.as_ground_segments(), stream.tokens.size());
  std::uint64_t cursor = 0;
  for (Turn& turn : restored.turns) {
    const std::uint64_t len = turn.tokens.size();
    if (turn.role == Role::kAssistant && len > 0) {
      std::map<std::string, std::uint64_t> votes;
      for (std::uint64_t t = cursor; t < cursor + len; ++t) ++votes[labels[t]];
      std::string winner;
      std::uint64_t best = 0;
      for (const auto& [name, count] : votes) {
        if (count > best) {
          best = count;
          winner = name;
        }
      }
      turn.name = winner;
    }
    cursor += len;
  }
  return restored;
}

}  // namespace agenttrace
