#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "agenttrace/prf.hpp"

namespace agenttrace {

/// Log-probability assigned to events with zero count under unsmoothed
/// n-gram estimates. Finite so downstream arithmetic stays well-defined;
/// exp(-50) ~ 2e-22, far below every tolerance used in scoring.
inline constexpr double kLogProbFloor = -50.0;

enum class SourceKind { kUniform, kZipfian, kNgram };

inline std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kUniform: return "uniform";
    case SourceKind::kZipfian: return "zipfian";
    case SourceKind::kNgram: return "ngram";
  }
  return "unknown";
}

/// Softmax in-place over arbitrary finite logits.
inline std::vector<double> softmax(std::span<const double> logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

/// Draw one index from softmax(logits) by inverse-CDF walk.
inline std::uint32_t sample_logits(std::span<const double> logits, SplitMix64& rng) {
  const std::vector<double> p = softmax(logits);
  const double u = rng.next_unit();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<std::uint32_t>(i);
  }
  return static_cast<std::uint32_t>(p.size() - 1);
}

/// Next-token distribution source standing in for a base language model.
/// next_logits returns natural-log probabilities; the keyed modulation
/// operates additively in this space.
class TokenDistributionSource {
 public:
  static TokenDistributionSource uniform(std::uint32_t vocab_size) {
    check_vocab(vocab_size);
    TokenDistributionSource s(SourceKind::kUniform, vocab_size);
    s.base_logits_.assign(vocab_size, -std::log(static_cast<double>(vocab_size)));
    return s;
  }

  /// p(v) proportional to 1/(v+1)^exponent.
  static TokenDistributionSource zipfian(std::uint32_t vocab_size, double exponent) {
    check_vocab(vocab_size);
    if (!std::isfinite(exponent)) throw std::invalid_argument("zipfian exponent must be finite");
    TokenDistributionSource s(SourceKind::kZipfian, vocab_size);
    s.zipf_exponent_ = exponent;
    s.base_logits_.resize(vocab_size);
    double z = 0.0;
    std::vector<double> w(vocab_size);
    for (std::uint32_t v = 0; v < vocab_size; ++v) {
      w[v] = std::pow(static_cast<double>(v + 1), -exponent);
      z += w[v];
    }
    for (std::uint32_t v = 0; v < vocab_size; ++v) s.base_logits_[v] = std::log(w[v] / z);
    return s;
  }

  std::uint32_t vocab_size() const { return vocab_size_; }
  SourceKind kind() const { return kind_; }
  int order() const { return order_; }
  double smoothing() const { return smoothing_; }
  double zipf_exponent() const { return zipf_exponent_; }

  /// Longest context suffix the source actually conditions on.
  std::size_t context_need() const {
    return kind_ == SourceKind::kNgram ? static_cast<std::size_t>(order_ - 1) : 0;
  }

  /// Finite log-probabilities of the next token given the context. The
  /// n-gram kind conditions on the last (order - 1) tokens with add-k
  /// smoothing; an unseen context falls back to the uniform distribution.
  std::vector<double> next_logits(std::span<const std::uint32_t> context) const {
    for (std::uint32_t t : context) {
      if (t >= vocab_size_) throw std::invalid_argument("context token out of range");
    }
    if (kind_ != SourceKind::kNgram) return base_logits_;

    const std::size_t ctx_len = static_cast<std::size_t>(order_ - 1);
    std::vector<double> logits(vocab_size_);
    const CountRow* row = nullptr;
    if (context.size() >= ctx_len) {
      const auto fp = ngram_context_key(context.subspan(context.size() - ctx_len));
      if (auto it = counts_.find(fp); it != counts_.end()) row = &it->second;
    }
    const double k = smoothing_;
    if (row == nullptr) {
      logits.assign(vocab_size_, -std::log(static_cast<double>(vocab_size_)));
      return logits;
    }
    const double denom = static_cast<double>(row->total) + k * vocab_size_;
    for (std::uint32_t v = 0; v < vocab_size_; ++v) {
      const double num = static_cast<double>(row->count(v)) + k;
      logits[v] = num > 0.0 ? std::log(num / denom) : kLogProbFloor;
    }
    return logits;
  }

  /// Frequency table over (order-1)-gram contexts, built from full context
  /// windows of the corpus: P(v | ctx) = (count + k) / (total + k*V).
  static TokenDistributionSource train_ngram(std::span<const std::uint32_t> corpus,
                                             int order, std::uint32_t vocab_size,
                                             double smoothing) {
    check_vocab(vocab_size);
    if (order < 1) throw std::invalid_argument("ngram order must be >= 1");
    if (corpus.empty()) throw std::invalid_argument("ngram corpus must be non-empty");
    if (smoothing < 0.0 || !std::isfinite(smoothing))
      throw std::invalid_argument("smoothing must be finite and >= 0");
    for (std::uint32_t t : corpus) {
      if (t >= vocab_size) throw std::invalid_argument("corpus token out of range");
    }
    TokenDistributionSource s(SourceKind::kNgram, vocab_size);
    s.order_ = order;
    s.smoothing_ = smoothing;
    const std::size_t ctx_len = static_cast<std::size_t>(order - 1);
    for (std::size_t j = ctx_len; j < corpus.size(); ++j) {
      const auto fp = ngram_context_key(corpus.subspan(j - ctx_len, ctx_len));
      auto& row = s.counts_[fp];
      row.add(corpus[j]);
    }
    return s;
  }

  friend bool operator==(const TokenDistributionSource& a, const TokenDistributionSource& b) {
    return a.kind_ == b.kind_ && a.vocab_size_ == b.vocab_size_ && a.order_ == b.order_ &&
           a.smoothing_ == b.smoothing_ && a.zipf_exponent_ == b.zipf_exponent_ &&
           a.counts_size_equal(b);
  }

 private:
  struct CountRow {
    std::unordered_map<std::uint32_t, std::uint64_t> by_token;
    std::uint64_t total = 0;
    void add(std::uint32_t v) {
      ++by_token[v];
      ++total;
    }
    std::uint64_t count(std::uint32_t v) const {
      auto it = by_token.find(v);
      return it == by_token.end() ? 0 : it->second;
    }
    bool operator==(const CountRow& o) const { return total == o.total && by_token == o.by_token; }
  };

  TokenDistributionSource(SourceKind kind, std::uint32_t vocab_size)
      : kind_(kind), vocab_size_(vocab_size) {}

  static void check_vocab(std::uint32_t vocab_size) {
    if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
  }

  static std::uint64_t ngram_context_key(std::span<const std::uint32_t> ctx) {
    std::uint64_t h = 0x6E6772616D5F6B65ULL;
    for (std::uint32_t t : ctx) h = hash_combine(h, t);
    return h;
  }

  bool counts_size_equal(const TokenDistributionSource& o) const { return counts_ == o.counts_; }

  SourceKind kind_;
  std::uint32_t vocab_size_;
  int order_ = 1;
  double smoothing_ = 0.0;
  double zipf_exponent_ = 0.0;
  std::vector<double> base_logits_;
  std::unordered_map<std::uint64_t, CountRow> counts_;
};

inline TokenDistributionSource train_ngram(std::span<const std::uint32_t> corpus, int order,
                                           std::uint32_t vocab_size, double smoothing) {
  return TokenDistributionSource::train_ngram(corpus, order, vocab_size, smoothing);
}

}  // namespace agenttrace
