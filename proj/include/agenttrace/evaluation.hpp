#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "agenttrace/corruption.hpp"
#include "agenttrace/errors.hpp"
#include "agenttrace/trace.hpp"

namespace agenttrace {

/// Fraction of positions whose labels match.
inline double token_acc(std::span<const std::string> pred, std::span<const std::string> truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw std::invalid_argument("token_acc needs equal non-empty labelings");
  }
  std::size_t hits = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t] == truth[t]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// Per-agent token-set IoU, macro-averaged over the agents present in the
/// ground truth. Both segmentations must cover [0, T).
inline double iou(std::span<const GroundSegment> pred, std::span<const GroundSegment> truth,
                  std::uint64_t trace_length) {
  const std::vector<std::string> pred_labels = labels_from_segments(pred, trace_length);
  const std::vector<std::string> truth_labels = labels_from_segments(truth, trace_length);
  std::set<std::string> agents;
  for (const auto& seg : truth) agents.insert(seg.agent_id);
  if (agents.empty()) throw std::invalid_argument("iou needs non-empty ground truth");
  double total = 0.0;
  for (const std::string& a : agents) {
    std::uint64_t inter = 0, uni = 0;
    for (std::uint64_t t = 0; t < trace_length; ++t) {
      const bool in_pred = pred_labels[t] == a;
      const bool in_truth = truth_labels[t] == a;
      if (in_pred && in_truth) ++inter;
      if (in_pred || in_truth) ++uni;
    }
    total += uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return total / static_cast<double>(agents.size());
}

/// Frobenius cosine between the ground-truth adjacency and the predicted
/// confidence-weighted adjacency.
inline double edge_sim(std::span<const double> truth, std::span<const double> pred,
                       std::uint32_t agent_count) {
  const std::size_t n = static_cast<std::size_t>(agent_count) * agent_count;
  if (truth.size() != n || pred.size() != n) {
    throw std::invalid_argument("edge_sim needs two K x K matrices");
  }
  double dot = 0.0, nt = 0.0, np = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += truth[i] * pred[i];
    nt += truth[i] * truth[i];
    np += pred[i] * pred[i];
  }
  if (nt == 0.0 || np == 0.0) {
    throw undefined_metric_error("edge_sim is undefined for a zero matrix");
  }
  return dot / (std::sqrt(nt) * std::sqrt(np));
}

struct RestorationAcc {
  double agent_restore = 0.0;
  std::optional<double> step_restore;
};

/// Restoration fidelity of a recovered log against the original: the
/// fraction of turns whose recovered name matches, and whether the turn
/// holding mistake_step still holds (the bulk of) the same content after
/// restoration.
inline RestorationAcc restoration_acc(const StructuredLog& restored,
                                      const StructuredLog& original) {
  if (restored.turns.size() != original.turns.size() || original.turns.empty()) {
    throw std::invalid_argument("restoration_acc needs equal non-zero turn counts");
  }
  RestorationAcc acc;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < original.turns.size(); ++i) {
    if (restored.turns[i].name == original.turns[i].name) ++hits;
  }
  acc.agent_restore = static_cast<double>(hits) / static_cast<double>(original.turns.size());

  if (!original.mistake_step.has_value()) return acc;
  const std::size_t step = *original.mistake_step;

  // Content spans over the shared concatenated stream.
  const auto spans = [](const StructuredLog& log) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    std::uint64_t cursor = 0;
    for (const Turn& t : log.turns) {
      const std::uint64_t len = t.tokens.empty() ? t.text.size() : t.tokens.size();
      out.emplace_back(cursor, cursor + len);
      cursor += len;
    }
    return out;
  };
  const auto orig_spans = spans(original);
  const auto rest_spans = spans(restored);
  if (orig_spans.back().second != rest_spans.back().second) {
    throw std::invalid_argument("restored and original logs carry different content streams");
  }
  const auto [os, oe] = orig_spans[step];
  std::size_t best = 0;
  std::uint64_t best_overlap = 0;
  for (std::size_t j = 0; j < rest_spans.size(); ++j) {
    const std::uint64_t lo = std::max(os, rest_spans[j].first);
    const std::uint64_t hi = std::min(oe, rest_spans[j].second);
    const std::uint64_t overlap = hi > lo ? hi - lo : 0;
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = j;
    }
  }
  acc.step_restore = best == step ? 1.0 : 0.0;
  return acc;
}

/// Binary transition adjacency induced by a segment sequence, with agents
/// indexed by their order in `agent_ids`.
inline std::vector<double> adjacency_from_segments(std::span<const GroundSegment> segments,
                                                   std::span<const std::string> agent_ids) {
  const std::uint32_t k = static_cast<std::uint32_t>(agent_ids.size());
  std::map<std::string, std::uint32_t> index;
  for (std::uint32_t a = 0; a < k; ++a) index[std::string(agent_ids[a])] = a;
  std::vector<double> m(static_cast<std::size_t>(k) * k, 0.0);
  for (std::size_t s = 1; s < segments.size(); ++s) {
    const auto from = index.find(segments[s - 1].agent_id);
    const auto to = index.find(segments[s].agent_id);
    if (from == index.end() || to == index.end()) {
      throw std::invalid_argument("segment agent not in the agent list");
    }
    if (from->second != to->second) {
      m[static_cast<std::size_t>(from->second) * k + to->second] = 1.0;
    }
  }
  return m;
}

}  // namespace agenttrace
