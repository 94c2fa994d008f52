#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agenttrace/prf.hpp"

namespace agenttrace {

enum class Role { kHuman, kAssistant };

inline std::string to_string(Role r) { return r == Role::kHuman ? "human" : "assistant"; }

inline Role role_from_string(const std::string& s) {
  if (s == "human") return Role::kHuman;
  if (s == "assistant") return Role::kAssistant;
  throw std::invalid_argument("unknown role: " + s);
}

/// One turn of a structured log. Content is either a token sequence or
/// text; exactly one of the two is populated.
struct Turn {
  Role role = Role::kAssistant;
  std::string name;
  std::vector<std::uint32_t> tokens;
  std::string text;

  friend bool operator==(const Turn&, const Turn&) = default;
};

/// Structured multi-agent log with task-level supervision fields.
struct StructuredLog {
  std::vector<Turn> turns;
  std::string question;
  std::string ground_truth;
  std::optional<std::string> system_prompt;
  std::optional<std::string> mistake_agent;
  std::optional<std::size_t> mistake_step;
  std::uint32_t vocab_size = 0;

  friend bool operator==(const StructuredLog&, const StructuredLog&) = default;

  void validate() const {
    if (turns.empty()) throw std::invalid_argument("log must have at least one turn");
    if (mistake_step.has_value() && *mistake_step >= turns.size()) {
      throw std::invalid_argument("mistake_step must index a turn");
    }
  }
};

/// Collapse agent identities: assistant turns get the generic name "Agent",
/// human turns keep their role with an empty name, and identity-leaking
/// top-level fields are dropped. Contents and turn order are untouched.
inline StructuredLog remove_ids(StructuredLog log) {
  log.validate();
  for (Turn& turn : log.turns) {
    turn.name = turn.role == Role::kAssistant ? "Agent" : "";
  }
  log.system_prompt.reset();
  return log;
}

namespace detail {

/// (turn_count - 1) distinct interior cut positions, sorted. Falls back to
/// fewer cuts when the stream is too short to host them all.
inline std::vector<std::size_t> draw_cut_points(std::size_t stream_len, std::size_t turn_count,
                                                std::uint64_t seed) {
  std::vector<std::size_t> cuts;
  if (turn_count < 2 || stream_len < 2) return cuts;
  const std::size_t wanted = std::min(turn_count - 1, stream_len - 1);
  std::set<std::size_t> chosen;
  SplitMix64 rng(mix64(seed ^ 0x637574ULL));
  while (chosen.size() < wanted) {
    chosen.insert(1 + static_cast<std::size_t>(rng.next_below(stream_len - 1)));
  }
  cuts.assign(chosen.begin(), chosen.end());
  return cuts;
}

template <typename Seq>
inline std::vector<Seq> resegment(const Seq& stream, std::size_t turn_count,
                                  const std::vector<std::size_t>& cuts) {
  std::vector<Seq> parts;
  std::size_t start = 0;
  for (std::size_t cut : cuts) {
    parts.push_back(Seq(stream.begin() + start, stream.begin() + cut));
    start = cut;
  }
  parts.push_back(Seq(stream.begin() + start, stream.end()));
  while (parts.size() < turn_count) parts.push_back(Seq{});
  return parts;
}

}  // namespace detail

/// Random cut-and-refill over the concatenated contents: the turn skeleton
/// (count, order, roles, names) is preserved while turn boundaries move to
/// random positions. The concatenation of contents is conserved exactly.
inline StructuredLog corrupt_boundaries(StructuredLog log, std::uint64_t seed) {
  log.validate();
  const bool token_mode =
      std::any_of(log.turns.begin(), log.turns.end(), [](const Turn& t) { return !t.tokens.empty(); });
  if (token_mode) {
    std::vector<std::uint32_t> stream;
    for (const Turn& t : log.turns) stream.insert(stream.end(), t.tokens.begin(), t.tokens.end());
    const auto cuts = detail::draw_cut_points(stream.size(), log.turns.size(), seed);
    auto parts = detail::resegment(stream, log.turns.size(), cuts);
    for (std::size_t i = 0; i < log.turns.size(); ++i) log.turns[i].tokens = std::move(parts[i]);
  } else {
    std::string stream;
    for (const Turn& t : log.turns) stream += t.text;
    const auto cuts = detail::draw_cut_points(stream.size(), log.turns.size(), seed);
    auto parts = detail::resegment(stream, log.turns.size(), cuts);
    for (std::size_t i = 0; i < log.turns.size(); ++i) log.turns[i].text = std::move(parts[i]);
  }
  return log;
}

/// A redaction rule: every match of `pattern` is replaced by `placeholder`.
struct RedactionRule {
  std::string pattern;
  std::string placeholder;
};

/// Rules for the synthetic PII alphabet used by the corruption harness.
inline std::vector<RedactionRule> default_redaction_rules() {
  return {
      {R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})", "[EMAIL]"},
      {R"(\+?[0-9]{3}[- ][0-9]{3,4}[- ][0-9]{4})", "[PHONE]"},
      {R"(\b(?:Alice|Bob|Carol|Dave|Erin|Frank|Grace|Heidi|Ivan|Judy)\s+(?:Anderson|Baker|Clark|Davis|Evans|Foster|Garcia|Hughes|Irwin|Jones)\b)",
       "[NAME]"},
  };
}

/// Replace every span matched by a rule with its placeholder; text outside
/// the matches is unchanged.
inline std::string redact_pii(const std::string& text, std::span<const RedactionRule> rules) {
  std::string out = text;
  for (const RedactionRule& rule : rules) {
    const std::regex re(rule.pattern);
    out = std::regex_replace(out, re, rule.placeholder);
  }
  return out;
}

inline std::string redact_pii(const std::string& text) {
  const auto rules = default_redaction_rules();
  return redact_pii(text, rules);
}

/// Token-space analog of span redaction: replace floor(rate * T) distinct
/// positions with a placeholder token id.
inline std::vector<std::uint32_t> redact_tokens(std::span<const std::uint32_t> tokens,
                                                double rate, std::uint32_t placeholder_id,
                                                std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("redaction rate must be in [0, 1]");
  std::vector<std::uint32_t> out(tokens.begin(), tokens.end());
  const auto wanted = static_cast<std::size_t>(rate * static_cast<double>(tokens.size()));
  std::set<std::size_t> positions;
  SplitMix64 rng(mix64(seed ^ 0x706969ULL));
  while (positions.size() < wanted) {
    positions.insert(static_cast<std::size_t>(rng.next_below(tokens.size())));
  }
  for (std::size_t p : positions) out[p] = placeholder_id;
  return out;
}

}  // namespace agenttrace
