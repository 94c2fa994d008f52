#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agenttrace/scorer.hpp"
#include "agenttrace/segmenter.hpp"

namespace agenttrace {

enum class Topology { kChain, kStarPure, kStarRing, kTree, kCircle, kComplete, kOther };

inline std::string to_string(Topology t) {
  switch (t) {
    case Topology::kChain: return "chain";
    case Topology::kStarPure: return "star_pure";
    case Topology::kStarRing: return "star_ring";
    case Topology::kTree: return "tree";
    case Topology::kCircle: return "circle";
    case Topology::kComplete: return "complete";
    case Topology::kOther: return "other";
  }
  return "other";
}

/// K x K binary adjacency, row-major, zero diagonal.
using AdjacencyMatrix = std::vector<std::uint8_t>;

/// M[i][j] = 1 iff some segment labeled i is immediately followed by one
/// labeled j. Labels are 0-based agent indices below K.
inline AdjacencyMatrix accumulate_adjacency(const SegmentAttribution& attribution,
                                            std::uint32_t agent_count) {
  AdjacencyMatrix m(static_cast<std::size_t>(agent_count) * agent_count, 0);
  for (const auto& seg : attribution.segments) {
    if (seg.agent_index >= agent_count) throw std::invalid_argument("segment label out of range");
  }
  for (std::size_t s = 1; s < attribution.segments.size(); ++s) {
    const std::uint32_t i = attribution.segments[s - 1].agent_index;
    const std::uint32_t j = attribution.segments[s].agent_index;
    if (i != j) m[static_cast<std::size_t>(i) * agent_count + j] = 1;
  }
  return m;
}

/// mu = sum over (i, j) of M_ij * 2^(i*K + j) for 0-based indices. Requires
/// K^2 <= 62 so the identifier fits one machine word.
inline std::uint64_t encode_bitmask(const AdjacencyMatrix& m, std::uint32_t agent_count) {
  if (static_cast<std::uint64_t>(agent_count) * agent_count > 62) {
    throw std::overflow_error("bitmask encoding requires K^2 <= 62");
  }
  if (m.size() != static_cast<std::size_t>(agent_count) * agent_count) {
    throw std::invalid_argument("adjacency matrix must be K x K");
  }
  std::uint64_t mu = 0;
  for (std::uint32_t i = 0; i < agent_count; ++i) {
    for (std::uint32_t j = 0; j < agent_count; ++j) {
      if (m[static_cast<std::size_t>(i) * agent_count + j]) {
        mu |= std::uint64_t{1} << (i * agent_count + j);
      }
    }
  }
  return mu;
}

inline AdjacencyMatrix decode_bitmask(std::uint64_t mu, std::uint32_t agent_count) {
  if (static_cast<std::uint64_t>(agent_count) * agent_count > 62) {
    throw std::overflow_error("bitmask decoding requires K^2 <= 62");
  }
  AdjacencyMatrix m(static_cast<std::size_t>(agent_count) * agent_count, 0);
  for (std::size_t b = 0; b < m.size(); ++b) m[b] = (mu >> b) & 1 ? 1 : 0;
  return m;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Local transition confidence at a boundary: logistic of the summed
/// left/right attribution margins over h stable windows on each side
/// (truncated at the field edges).
inline double transition_confidence(const ScoreField& field, std::uint64_t boundary_token,
                                    std::uint32_t from_agent, std::uint32_t to_agent,
                                    int h = 4) {
  if (boundary_token >= field.trace_length) {
    throw std::invalid_argument("boundary outside the score field");
  }
  if (from_agent >= field.num_agents() || to_agent >= field.num_agents()) {
    throw std::invalid_argument("agent index out of range");
  }
  if (h < 1) throw std::invalid_argument("h must be >= 1");
  const std::size_t s = field.nearest_window(boundary_token);
  const std::size_t n = field.num_windows();

  const auto side_margin = [&](std::size_t lo, std::size_t hi, std::uint32_t agent) {
    // Mean score per agent over [lo, hi), then agent's lead over the rest.
    double own = 0.0;
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < field.num_agents(); ++a) {
      double sum = 0.0;
      for (std::size_t w = lo; w < hi; ++w) sum += field.at(w, a);
      const double mean = sum / static_cast<double>(hi - lo);
      if (a == agent) {
        own = mean;
      } else {
        best_other = std::max(best_other, mean);
      }
    }
    return own - best_other;
  };

  const auto hs = static_cast<std::size_t>(h);
  std::size_t left_lo = s >= hs ? s - hs : 0;
  std::size_t left_hi = s;
  if (left_hi == left_lo) left_hi = std::min(n, left_lo + 1);  // boundary at the field edge
  std::size_t right_lo = std::min(n - 1, s + 1);
  std::size_t right_hi = std::min(n, right_lo + hs);
  const double left = side_margin(left_lo, left_hi, from_agent);
  const double right = side_margin(right_lo, right_hi, to_agent);
  return logistic(left + right);
}

namespace detail {

struct UndirectedSupport {
  std::uint32_t k = 0;
  std::vector<std::uint8_t> edge;  // k x k symmetric

  bool has(std::uint32_t i, std::uint32_t j) const {
    return edge[static_cast<std::size_t>(i) * k + j] != 0;
  }
  std::uint32_t degree(std::uint32_t i) const {
    std::uint32_t d = 0;
    for (std::uint32_t j = 0; j < k; ++j) d += has(i, j) ? 1 : 0;
    return d;
  }
  std::uint32_t edge_count() const {
    std::uint32_t e = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
      for (std::uint32_t j = i + 1; j < k; ++j) e += has(i, j) ? 1 : 0;
    }
    return e;
  }
  bool connected() const {
    std::vector<std::uint8_t> seen(k, 0);
    std::vector<std::uint32_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::uint32_t v = stack.back();
      stack.pop_back();
      for (std::uint32_t j = 0; j < k; ++j) {
        if (has(v, j) && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](std::uint8_t s) { return s != 0; });
  }
};

inline UndirectedSupport undirected_support(const AdjacencyMatrix& m, std::uint32_t k) {
  UndirectedSupport u;
  u.k = k;
  u.edge.assign(static_cast<std::size_t>(k) * k, 0);
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = 0; j < k; ++j) {
      if (i != j && m[static_cast<std::size_t>(i) * k + j]) {
        u.edge[static_cast<std::size_t>(i) * k + j] = 1;
        u.edge[static_cast<std::size_t>(j) * k + i] = 1;
      }
    }
  }
  return u;
}

}  // namespace detail

/// Coordination pattern of the undirected support of M.
inline Topology classify_topology(const AdjacencyMatrix& m, std::uint32_t agent_count) {
  if (m.size() != static_cast<std::size_t>(agent_count) * agent_count) {
    throw std::invalid_argument("adjacency matrix must be K x K");
  }
  const auto u = detail::undirected_support(m, agent_count);
  const std::uint32_t k = agent_count;
  if (k < 2 || u.edge_count() == 0) return Topology::kOther;
  if (!u.connected()) return Topology::kOther;

  const std::uint32_t edges = u.edge_count();
  std::uint32_t deg1 = 0, deg2 = 0, max_deg = 0, hub = 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint32_t d = u.degree(i);
    if (d == 1) ++deg1;
    if (d == 2) ++deg2;
    if (d > max_deg) {
      max_deg = d;
      hub = i;
    }
  }

  // Path: acyclic with exactly two endpoints (K = 2 is the single edge,
  // which counts as a path rather than the complete graph on two nodes).
  if (edges == k - 1 && (k == 2 || (deg1 == 2 && deg2 == k - 2))) return Topology::kChain;
  if (edges == static_cast<std::uint32_t>(k) * (k - 1) / 2) return Topology::kComplete;
  // Star: one hub adjacent to all others, no spoke-spoke edges.
  if (edges == k - 1 && max_deg == k - 1 && k >= 3) return Topology::kStarPure;
  // Star plus a single cycle over the spokes.
  if (max_deg == k - 1 && k >= 4) {
    bool spokes_cycle = true;
    for (std::uint32_t i = 0; i < k && spokes_cycle; ++i) {
      if (i == hub) continue;
      std::uint32_t spoke_deg = 0;
      for (std::uint32_t j = 0; j < k; ++j) {
        if (j != hub && j != i && u.has(i, j)) ++spoke_deg;
      }
      if (spoke_deg != 2) spokes_cycle = false;
    }
    if (spokes_cycle && edges == 2 * (k - 1)) return Topology::kStarRing;
  }
  // Single cycle through all nodes.
  if (edges == k && deg2 == k && k >= 3) return Topology::kCircle;
  if (edges == k - 1) return Topology::kTree;
  return Topology::kOther;
}

/// Transition adjacency with confidences, bitmask encoding, and topology
/// class.
struct TransitionGraph {
  std::uint32_t agent_count = 0;
  AdjacencyMatrix adjacency;
  std::vector<double> confidence;  // K x K, max-aggregated P_ij
  std::uint64_t mu = 0;
  Topology topology_class = Topology::kOther;

  friend bool operator==(const TransitionGraph&, const TransitionGraph&) = default;
};

/// Accumulate the graph over all attributed transitions, fill per-boundary
/// confidences into the attribution, and aggregate edge confidences by
/// maximum.
inline TransitionGraph build_transition_graph(const ScoreField& field,
                                              SegmentAttribution& attribution, int h = 4) {
  const auto k = static_cast<std::uint32_t>(field.num_agents());
  TransitionGraph g;
  g.agent_count = k;
  g.adjacency = accumulate_adjacency(attribution, k);
  g.confidence.assign(static_cast<std::size_t>(k) * k, 0.0);
  for (std::size_t s = 1; s < attribution.segments.size(); ++s) {
    const std::uint32_t i = attribution.segments[s - 1].agent_index;
    const std::uint32_t j = attribution.segments[s].agent_index;
    const std::uint64_t boundary = attribution.segments[s].start;
    const double p = transition_confidence(field, boundary, i, j, h);
    attribution.segments[s].confidence = p;
    auto& slot = g.confidence[static_cast<std::size_t>(i) * k + j];
    slot = std::max(slot, p);
  }
  if (!attribution.segments.empty()) attribution.segments.front().confidence = 1.0;
  if (static_cast<std::uint64_t>(k) * k <= 62) g.mu = encode_bitmask(g.adjacency, k);
  g.topology_class = classify_topology(g.adjacency, k);
  return g;
}

}  // namespace agenttrace
