#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "agenttrace/prf.hpp"
#include "agenttrace/scorer.hpp"
#include "agenttrace/segmenter.hpp"
#include "agenttrace/trace.hpp"

namespace agenttrace {

/// Sparse TF-IDF vector over token unigram and bigram features.
struct TfIdfVector {
  std::unordered_map<std::uint64_t, double> weights;

  double dot(const TfIdfVector& other) const {
    const auto& small = weights.size() <= other.weights.size() ? weights : other.weights;
    const auto& large = weights.size() <= other.weights.size() ? other.weights : weights;
    double d = 0.0;
    for (const auto& [f, w] : small) {
      if (auto it = large.find(f); it != large.end()) d += w * it->second;
    }
    return d;
  }
  double norm() const {
    double n = 0.0;
    for (const auto& [f, w] : weights) n += w * w;
    return std::sqrt(n);
  }
};

inline double cosine(const TfIdfVector& a, const TfIdfVector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

/// Per-agent TF-IDF prototypes built from each agent's first (round-0)
/// ground-truth segment.
struct PrototypeModel {
  std::vector<std::string> agent_ids;
  std::vector<TfIdfVector> prototypes;
  std::unordered_map<std::uint64_t, double> idf;
  std::uint32_t vocab_size = 0;

  std::size_t agent_count() const { return agent_ids.size(); }
};

namespace detail {

inline std::uint64_t unigram_feature(std::uint32_t v) { return v; }

inline std::uint64_t bigram_feature(std::uint32_t a, std::uint32_t b, std::uint32_t vocab) {
  return static_cast<std::uint64_t>(vocab) +
         static_cast<std::uint64_t>(a) * vocab + b;
}

inline std::unordered_map<std::uint64_t, double> term_counts(std::span<const std::uint32_t> tokens,
                                                             std::uint32_t vocab) {
  std::unordered_map<std::uint64_t, double> tf;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tf[unigram_feature(tokens[i])] += 1.0;
    if (i + 1 < tokens.size()) tf[bigram_feature(tokens[i], tokens[i + 1], vocab)] += 1.0;
  }
  return tf;
}

}  // namespace detail

/// TF-IDF embedding of a token span under a fitted prototype model:
/// raw term counts scaled by idf and L2-normalized.
inline TfIdfVector embed_tokens(std::span<const std::uint32_t> tokens,
                                const PrototypeModel& model) {
  TfIdfVector vec;
  for (const auto& [f, count] : detail::term_counts(tokens, model.vocab_size)) {
    const auto it = model.idf.find(f);
    const double idf = it != model.idf.end() ? it->second : 1.0;  // unseen feature
    vec.weights[f] = count * idf;
  }
  const double n = vec.norm();
  if (n > 0.0) {
    for (auto& [f, w] : vec.weights) w /= n;
  }
  return vec;
}

/// Fit prototypes on the round-0 segments of a trace with ground truth.
/// idf(f) = ln((1 + N) / (1 + df)) + 1 over the N prototype documents.
inline PrototypeModel build_prototypes(const Trace& trace) {
  if (trace.ground_truth.empty()) throw std::invalid_argument("prototypes need ground truth");
  PrototypeModel model;
  model.vocab_size = trace.vocab_size;
  std::vector<std::span<const std::uint32_t>> docs;
  for (const GroundSegment& seg : trace.ground_truth) {
    if (std::find(model.agent_ids.begin(), model.agent_ids.end(), seg.agent_id) !=
        model.agent_ids.end()) {
      continue;  // round-0 segment only
    }
    model.agent_ids.push_back(seg.agent_id);
    docs.push_back(std::span<const std::uint32_t>(trace.tokens).subspan(
        seg.start, seg.end - seg.start));
  }
  const double n_docs = static_cast<double>(docs.size());
  std::unordered_map<std::uint64_t, double> df;
  std::vector<std::unordered_map<std::uint64_t, double>> tfs;
  tfs.reserve(docs.size());
  for (const auto& doc : docs) {
    tfs.push_back(detail::term_counts(doc, model.vocab_size));
    for (const auto& [f, c] : tfs.back()) df[f] += 1.0;
  }
  for (const auto& [f, d] : df) {
    model.idf[f] = std::log((1.0 + n_docs) / (1.0 + d)) + 1.0;
  }
  for (const auto& tf : tfs) {
    TfIdfVector vec;
    for (const auto& [f, c] : tf) vec.weights[f] = c * model.idf[f];
    const double n = vec.norm();
    if (n == 0.0) throw std::invalid_argument("prototype segment has no features");
    for (auto& [f, w] : vec.weights) w /= n;
    model.prototypes.push_back(std::move(vec));
  }
  return model;
}

namespace detail {

inline SegmentAttribution segments_from_labeled_cuts(
    const std::vector<std::uint64_t>& cuts, const std::vector<std::uint32_t>& labels,
    std::span<const std::string> agent_ids, std::uint64_t trace_length) {
  SegmentAttribution attr;
  attr.trace_length = trace_length;
  std::uint64_t start = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint64_t end = i + 1 < labels.size() ? cuts[i] : trace_length;
    if (!attr.segments.empty() && attr.segments.back().agent_index == labels[i]) {
      attr.segments.back().end = end;
    } else {
      attr.segments.push_back(AttributedSegment{start, end, labels[i],
                                                std::string(agent_ids[labels[i]]), 0.0});
    }
    start = end;
  }
  for (std::size_t i = 1; i < attr.segments.size(); ++i) {
    attr.boundaries.push_back(attr.segments[i].start);
  }
  return attr;
}

inline std::uint32_t argmax_cosine(const TfIdfVector& vec, const PrototypeModel& model) {
  std::uint32_t best = 0;
  double best_cos = -1.0;
  for (std::size_t a = 0; a < model.agent_count(); ++a) {
    const double c = cosine(vec, model.prototypes[a]);
    if (c > best_cos) {
      best_cos = c;
      best = static_cast<std::uint32_t>(a);
    }
  }
  return best;
}

}  // namespace detail

/// Attribution with ground-truth boundaries: each true segment is labeled
/// by the prototype of highest cosine similarity (ties to the lowest agent
/// index).
inline SegmentAttribution oracle_attribute(const Trace& trace, const PrototypeModel& model) {
  if (trace.ground_truth.empty()) throw std::invalid_argument("oracle needs ground truth");
  std::vector<std::uint64_t> cuts;
  std::vector<std::uint32_t> labels;
  for (const GroundSegment& seg : trace.ground_truth) {
    const auto span =
        std::span<const std::uint32_t>(trace.tokens).subspan(seg.start, seg.end - seg.start);
    labels.push_back(detail::argmax_cosine(embed_tokens(span, model), model));
    if (seg.end < trace.tokens.size()) cuts.push_back(seg.end);
  }
  return detail::segments_from_labeled_cuts(cuts, labels, model.agent_ids, trace.tokens.size());
}

struct ViterbiPath {
  std::vector<std::uint32_t> states;
  double log_score = 0.0;
};

/// Max-product decoding in log space over a sticky transition prior:
/// probability rho of staying, (1 - rho)/(K - 1) per move, uniform start.
inline ViterbiPath viterbi_decode(const std::vector<std::vector<double>>& log_emit,
                                  double stickiness) {
  if (stickiness <= 0.0 || stickiness >= 1.0) {
    throw std::invalid_argument("stickiness must lie in (0, 1)");
  }
  const std::size_t n = log_emit.size();
  if (n == 0) throw std::invalid_argument("no emissions to decode");
  const std::size_t k = log_emit[0].size();
  if (k == 0) throw std::invalid_argument("no states to decode");

  const double log_stay = std::log(stickiness);
  const double log_move = k > 1 ? std::log((1.0 - stickiness) / static_cast<double>(k - 1))
                                : -std::numeric_limits<double>::infinity();
  const double log_init = -std::log(static_cast<double>(k));

  std::vector<std::vector<double>> score(n, std::vector<double>(k));
  std::vector<std::vector<std::uint32_t>> back(n, std::vector<std::uint32_t>(k, 0));
  for (std::size_t a = 0; a < k; ++a) score[0][a] = log_init + log_emit[0][a];
  for (std::size_t w = 1; w < n; ++w) {
    for (std::size_t a = 0; a < k; ++a) {
      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t p = 0; p < k; ++p) {
        const double cand = score[w - 1][p] + (p == a ? log_stay : log_move);
        if (cand > best) {
          best = cand;
          arg = static_cast<std::uint32_t>(p);
        }
      }
      score[w][a] = best + log_emit[w][a];
      back[w][a] = arg;
    }
  }
  ViterbiPath out;
  out.states.resize(n);
  std::size_t best = 0;
  for (std::size_t a = 1; a < k; ++a) {
    if (score[n - 1][a] > score[n - 1][best]) best = a;
  }
  out.states[n - 1] = static_cast<std::uint32_t>(best);
  out.log_score = score[n - 1][best];
  for (std::size_t w = n; w-- > 1;) out.states[w - 1] = back[w][out.states[w]];
  return out;
}

/// Sticky-HMM attribution: emissions are softmax over window-prototype
/// cosines, transitions keep probability rho on the current state, and the
/// most likely state sequence is decoded by max-product in log space.
inline SegmentAttribution viterbi_attribute(const Trace& trace, const PrototypeModel& model,
                                            std::uint32_t window_tokens,
                                            std::uint32_t step_tokens, double stickiness) {
  const std::size_t k = model.agent_count();
  if (k == 0) throw std::invalid_argument("prototype model is empty");
  const std::uint64_t T = trace.tokens.size();
  if (T < window_tokens) throw empty_field_error("trace shorter than one window");

  std::vector<std::uint64_t> starts;
  for (std::uint64_t s = 0; s + window_tokens <= T; s += step_tokens) starts.push_back(s);
  const std::size_t n = starts.size();

  // Log emissions per window.
  std::vector<std::vector<double>> log_emit(n, std::vector<double>(k));
  for (std::size_t w = 0; w < n; ++w) {
    const auto span =
        std::span<const std::uint32_t>(trace.tokens).subspan(starts[w], window_tokens);
    const TfIdfVector vec = embed_tokens(span, model);
    std::vector<double> sims(k);
    for (std::size_t a = 0; a < k; ++a) sims[a] = cosine(vec, model.prototypes[a]);
    const std::vector<double> probs = softmax(sims);
    for (std::size_t a = 0; a < k; ++a) log_emit[w][a] = std::log(probs[a]);
  }

  const std::vector<std::uint32_t> path = viterbi_decode(log_emit, stickiness).states;

  // Expand window labels to tokens: each window owns the tokens closer to
  // its center than to any neighbor's.
  std::vector<std::uint64_t> cuts;
  std::vector<std::uint32_t> labels{path[0]};
  for (std::size_t w = 1; w < n; ++w) {
    if (path[w] != path[w - 1]) {
      const std::uint64_t mid =
          (starts[w - 1] + window_tokens / 2 + starts[w] + window_tokens / 2 + 1) / 2;
      cuts.push_back(std::min<std::uint64_t>(mid, T - 1));
      labels.push_back(path[w]);
    }
  }
  return detail::segments_from_labeled_cuts(cuts, labels, model.agent_ids, T);
}

/// K-1 uniform random distinct cut points with uniform random labels.
inline SegmentAttribution random_segment(const Trace& trace, std::uint32_t agent_count,
                                         std::uint64_t seed,
                                         std::span<const std::string> agent_ids) {
  if (agent_count < 1) throw std::invalid_argument("agent_count must be >= 1");
  if (agent_ids.size() < agent_count) throw std::invalid_argument("agent id list too short");
  const std::uint64_t T = trace.tokens.size();
  SplitMix64 rng(mix64(seed ^ 0x72616E64ULL));
  std::set<std::uint64_t> cut_set;
  const std::uint64_t wanted = std::min<std::uint64_t>(agent_count - 1, T > 0 ? T - 1 : 0);
  while (cut_set.size() < wanted) {
    cut_set.insert(1 + rng.next_below(T - 1));
  }
  const std::vector<std::uint64_t> cuts(cut_set.begin(), cut_set.end());
  std::vector<std::uint32_t> labels;
  for (std::size_t i = 0; i < cuts.size() + 1; ++i) {
    labels.push_back(static_cast<std::uint32_t>(rng.next_below(agent_count)));
  }
  return detail::segments_from_labeled_cuts(cuts, labels, agent_ids, T);
}

/// Separator-hierarchy splitter for plain text: blank lines first, then
/// single newlines, then equal-size splits, until exactly K parts exist.
inline std::vector<std::string> recursive_split_text(const std::string& text, std::uint32_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::vector<std::string> parts{text};
  for (const char* sep : {"\n\n", "\n"}) {
    const std::string s(sep);
    std::vector<std::string> next;
    for (const std::string& part : parts) {
      std::size_t start = 0;
      std::size_t pos;
      while (next.size() + 1 < k && (pos = part.find(s, start)) != std::string::npos) {
        next.push_back(part.substr(start, pos - start));
        start = pos + s.size();
      }
      next.push_back(part.substr(start));
    }
    parts = std::move(next);
    if (parts.size() >= k) break;
  }
  if (parts.size() < k) {
    // Not enough separators: equal-size split of the concatenated text.
    std::string all;
    for (const auto& p : parts) all += p;
    parts.clear();
    const std::size_t base = all.size() / k;
    std::size_t cursor = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
      const std::size_t len = i + 1 == k ? all.size() - cursor : base;
      parts.push_back(all.substr(cursor, len));
      cursor += len;
    }
  }
  return parts;
}

/// Token traces carry no separators, so the splitter falls back to K equal
/// spans; each span is labeled by prototype cosine.
inline SegmentAttribution recursive_segment(const Trace& trace, std::uint32_t k,
                                            const PrototypeModel& model) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const std::uint64_t T = trace.tokens.size();
  if (T < k) throw std::invalid_argument("trace shorter than k tokens");
  std::vector<std::uint64_t> cuts;
  const std::uint64_t base = T / k;
  for (std::uint32_t i = 1; i < k; ++i) cuts.push_back(i * base);
  std::vector<std::uint32_t> labels;
  std::uint64_t start = 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint64_t end = i + 1 < k ? cuts[i] : T;
    const auto span = std::span<const std::uint32_t>(trace.tokens).subspan(start, end - start);
    labels.push_back(detail::argmax_cosine(embed_tokens(span, model), model));
    start = end;
  }
  return detail::segments_from_labeled_cuts(cuts, labels, model.agent_ids, T);
}

}  // namespace agenttrace
