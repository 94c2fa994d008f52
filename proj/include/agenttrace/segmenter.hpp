#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "agenttrace/scorer.hpp"

namespace agenttrace {

/// One-dimensional competitive margin signal over window starts: the
/// leading agent's window score minus the runner-up's, then smoothed with a
/// centered moving average. corr_factor and noise_lag describe the serial
/// correlation induced by window overlap and smoothing; the detector uses
/// them to put its threshold on the scale of an equivalent independent
/// series.
struct MarginSeries {
  std::vector<double> z;
  std::vector<std::uint32_t> leader;
  int smooth_win = 5;
  double corr_factor = 1.0;
  int noise_lag = 1;
};

struct BoundaryParams {
  /// Coefficient of the adaptive threshold tau = tau_c * sigma_noise *
  /// sqrt(corr_factor * interval_length).
  double tau_c = 1.6;
  /// Absolute threshold; overrides the adaptive rule when set.
  std::optional<double> fixed_tau;
  int min_points_for_pair = 10;
  int local_radius = 8;
};

namespace detail {

/// Variance ratio between the smoothed margin and the raw window scores,
/// for windows of width w sampled every `step` tokens with iid token
/// scores: corr(f_t, f_{t+k}) = max(0, 1 - k*step/w).
inline double smoothing_variance_ratio(std::uint32_t window_tokens, std::uint32_t step_tokens,
                                       int smooth_win) {
  const int h = smooth_win;
  double total = 0.0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < h; ++j) {
      const double lag = std::abs(i - j) * static_cast<double>(step_tokens);
      total += std::max(0.0, 1.0 - lag / static_cast<double>(window_tokens));
    }
  }
  return total / (h * h);
}

inline double interval_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Robust per-point noise scale from lag-d differences; the median is
/// insensitive to the level shifts the detector is looking for.
inline double robust_noise_sd(std::span<const double> u, int lag) {
  if (static_cast<std::size_t>(lag) >= u.size()) lag = static_cast<int>(u.size()) - 1;
  if (lag < 1) return 0.0;
  std::vector<double> diffs;
  diffs.reserve(u.size() - lag);
  for (std::size_t t = 0; t + lag < u.size(); ++t) {
    diffs.push_back(std::abs(u[t + lag] - u[t]));
  }
  std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
  const double med = diffs[diffs.size() / 2];
  // |N(0, 2s^2)| has median sqrt(2)*0.6744898*s.
  return med / (std::sqrt(2.0) * 0.6744897501960817);
}

}  // namespace detail

/// Per-window leader and margin, smoothed. Requires at least two agents.
inline MarginSeries competitive_margin(const ScoreField& field, int smooth_win = 5) {
  if (field.num_agents() < 2) throw std::invalid_argument("competitive margin needs >= 2 agents");
  if (smooth_win < 1 || smooth_win % 2 == 0) {
    throw std::invalid_argument("smooth_win must be odd and positive");
  }
  const std::size_t n = field.num_windows();
  std::vector<double> raw(n);
  MarginSeries margin;
  margin.smooth_win = smooth_win;
  margin.leader.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < field.num_agents(); ++a) {
      if (field.at(t, a) > field.at(t, best)) best = a;
    }
    double runner_up = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < field.num_agents(); ++a) {
      if (a != best) runner_up = std::max(runner_up, field.at(t, a));
    }
    margin.leader[t] = static_cast<std::uint32_t>(best);
    raw[t] = field.at(t, best) - runner_up;
  }
  // Centered moving average; edges use shrunken windows.
  margin.z.resize(n);
  const int half = smooth_win / 2;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= static_cast<std::size_t>(half) ? t - half : 0;
    const std::size_t hi = std::min(n - 1, t + half);
    double s = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) s += raw[i];
    margin.z[t] = s / static_cast<double>(hi - lo + 1);
  }
  const double q =
      detail::smoothing_variance_ratio(field.window_tokens, field.step_tokens, smooth_win);
  const double overlap = std::max(1.0, static_cast<double>(field.window_tokens) /
                                           static_cast<double>(field.step_tokens));
  margin.corr_factor = overlap / q;
  margin.noise_lag = static_cast<int>(std::ceil(overlap)) + smooth_win - 1;
  return margin;
}

/// Cumulative deviation from the interval's own mean. The final entry
/// telescopes to zero up to rounding.
inline std::vector<double> cusum(std::span<const double> z) {
  if (z.size() < 2) throw std::invalid_argument("cusum interval must have >= 2 points");
  const double mean = detail::interval_mean(z);
  std::vector<double> c(z.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    acc += z[t] - mean;
    c[t] = acc;
  }
  return c;
}

namespace detail {

/// Margin signed by leader agreement with the interval's dominant leader.
/// A leader change turns the nonnegative margin into a level shift that the
/// CUSUM statistic accumulates linearly.
inline std::vector<double> signed_margin(const MarginSeries& margin, std::size_t lo,
                                         std::size_t hi) {
  std::uint32_t max_label = 0;
  for (std::size_t t = lo; t < hi; ++t) max_label = std::max(max_label, margin.leader[t]);
  std::vector<std::size_t> counts(max_label + 1, 0);
  for (std::size_t t = lo; t < hi; ++t) ++counts[margin.leader[t]];
  std::uint32_t dominant = 0;
  for (std::uint32_t a = 1; a <= max_label; ++a) {
    if (counts[a] > counts[dominant]) dominant = a;
  }
  std::vector<double> u(hi - lo);
  for (std::size_t t = lo; t < hi; ++t) {
    u[t - lo] = margin.leader[t] == dominant ? margin.z[t] : -margin.z[t];
  }
  return u;
}

struct CusumTest {
  std::size_t argmax = 0;   // index into the interval
  double stat = 0.0;        // |C| at the argmax
  double threshold = 0.0;
};

inline CusumTest cusum_test(const MarginSeries& margin, std::size_t lo, std::size_t hi,
                            const BoundaryParams& params) {
  const std::vector<double> u = signed_margin(margin, lo, hi);
  const std::vector<double> c = cusum(u);
  CusumTest test;
  for (std::size_t t = 0; t < c.size(); ++t) {
    if (std::abs(c[t]) > test.stat) {
      test.stat = std::abs(c[t]);
      test.argmax = t;
    }
  }
  if (params.fixed_tau.has_value()) {
    test.threshold = *params.fixed_tau;
  } else {
    const double sd = robust_noise_sd(u, margin.noise_lag);
    test.threshold =
        params.tau_c * sd * std::sqrt(margin.corr_factor * static_cast<double>(hi - lo));
  }
  return test;
}

inline void detect_recursive(const MarginSeries& margin, std::size_t lo, std::size_t hi,
                             const BoundaryParams& params, std::vector<std::size_t>& out) {
  const auto min_side = static_cast<std::size_t>(params.min_points_for_pair);
  if (hi - lo < 2 * min_side || hi - lo < 2) return;
  const CusumTest test = cusum_test(margin, lo, hi, params);
  if (!(test.stat > test.threshold)) return;
  const std::size_t split = lo + test.argmax + 1;
  if (split - lo < min_side || hi - split < min_side) return;
  detect_recursive(margin, lo, split, params, out);
  out.push_back(split);
  detect_recursive(margin, split, hi, params, out);
}

}  // namespace detail

/// Recursive binary segmentation over window indices: on each interval take
/// the CUSUM argmax, accept it when |C| clears the threshold and both sides
/// keep at least min_points_for_pair windows, then recurse.
inline std::vector<std::size_t> detect_boundary_windows(const MarginSeries& margin,
                                                        const BoundaryParams& params) {
  if (params.min_points_for_pair < 1) {
    throw std::invalid_argument("min_points_for_pair must be >= 1");
  }
  std::vector<std::size_t> out;
  if (margin.z.size() >= 2) {
    detail::detect_recursive(margin, 0, margin.z.size(), params, out);
  }
  return out;
}

/// Window index -> token position at the window start + floor(w/2).
inline std::uint64_t boundary_token(const ScoreField& field, std::size_t window_index) {
  return field.window_starts[window_index] + field.window_tokens / 2;
}

inline std::vector<std::uint64_t> detect_boundaries(const MarginSeries& margin,
                                                    const ScoreField& field,
                                                    const BoundaryParams& params) {
  std::vector<std::uint64_t> tokens;
  for (std::size_t w : detect_boundary_windows(margin, params)) {
    tokens.push_back(boundary_token(field, w));
  }
  return tokens;
}

/// Re-run the CUSUM argmax restricted to +-local_radius windows around a
/// coarse boundary. local_radius = 0 leaves the boundary unchanged.
inline std::size_t refine_boundary(const MarginSeries& margin, std::size_t coarse_window,
                                   int local_radius) {
  if (coarse_window >= margin.z.size()) throw std::invalid_argument("boundary outside series");
  if (local_radius <= 0) return coarse_window;
  const auto r = static_cast<std::size_t>(local_radius);
  const std::size_t lo = coarse_window >= r ? coarse_window - r : 0;
  const std::size_t hi = std::min(margin.z.size(), coarse_window + r + 1);
  if (hi - lo < 2) return coarse_window;
  const std::vector<double> u = detail::signed_margin(margin, lo, hi);
  const std::vector<double> c = cusum(u);
  std::size_t argmax = 0;
  double best = -1.0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    if (std::abs(c[t]) > best) {
      best = std::abs(c[t]);
      argmax = t;
    }
  }
  std::size_t refined = lo + argmax + 1;
  if (refined >= margin.z.size()) refined = margin.z.size() - 1;
  return refined;
}

/// Ordered segments with agent labels; the piecewise-constant attribution.
struct AttributedSegment {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  std::uint32_t agent_index = 0;
  std::string agent_id;
  double confidence = 0.0;

  friend bool operator==(const AttributedSegment&, const AttributedSegment&) = default;
};

struct SegmentAttribution {
  std::vector<std::uint64_t> boundaries;
  std::vector<AttributedSegment> segments;
  std::uint64_t trace_length = 0;

  friend bool operator==(const SegmentAttribution&, const SegmentAttribution&) = default;

  std::vector<GroundSegment> as_ground_segments() const {
    std::vector<GroundSegment> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(GroundSegment{s.start, s.end, s.agent_id});
    return out;
  }
};

namespace detail {

/// Windows describing a token span: those whose center falls inside it,
/// falling back to overlap and then to the nearest window for spans
/// narrower than the window grid.
inline std::pair<std::size_t, std::size_t> windows_for_span(const ScoreField& field,
                                                            std::uint64_t start,
                                                            std::uint64_t end) {
  const std::size_t n = field.num_windows();
  std::size_t lo = n, hi = 0;
  for (std::size_t w = 0; w < n; ++w) {
    const std::uint64_t center = field.window_center(w);
    if (center >= start && center < end) {
      lo = std::min(lo, w);
      hi = std::max(hi, w + 1);
    }
  }
  if (lo < hi) return {lo, hi};
  for (std::size_t w = 0; w < n; ++w) {
    const std::uint64_t ws = field.window_starts[w];
    if (ws < end && ws + field.window_tokens > start) {
      lo = std::min(lo, w);
      hi = std::max(hi, w + 1);
    }
  }
  if (lo < hi) return {lo, hi};
  const std::size_t w = field.nearest_window(start + (end - start) / 2);
  return {w, w + 1};
}

}  // namespace detail

/// Label each segment with the agent of highest mean window score, then
/// merge adjacent segments that received the same label.
inline SegmentAttribution attribute(const ScoreField& field,
                                    std::span<const std::uint64_t> boundary_tokens) {
  const std::uint64_t T = field.trace_length;
  std::vector<std::uint64_t> cuts(boundary_tokens.begin(), boundary_tokens.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::erase_if(cuts, [T](std::uint64_t c) { return c == 0 || c >= T; });

  SegmentAttribution attr;
  attr.trace_length = T;
  std::uint64_t start = 0;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const std::uint64_t end = i < cuts.size() ? cuts[i] : T;
    const auto [wlo, whi] = detail::windows_for_span(field, start, end);
    std::size_t best = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < field.num_agents(); ++a) {
      double sum = 0.0;
      for (std::size_t w = wlo; w < whi; ++w) sum += field.at(w, a);
      const double mean = sum / static_cast<double>(whi - wlo);
      if (mean > best_mean) {
        best_mean = mean;
        best = a;
      }
    }
    if (!attr.segments.empty() && attr.segments.back().agent_index == best) {
      attr.segments.back().end = end;
    } else {
      attr.segments.push_back(AttributedSegment{start, end, static_cast<std::uint32_t>(best),
                                                field.agents[best], 0.0});
    }
    start = end;
  }
  for (std::size_t i = 1; i < attr.segments.size(); ++i) {
    attr.boundaries.push_back(attr.segments[i].start);
  }
  return attr;
}

}  // namespace agenttrace
