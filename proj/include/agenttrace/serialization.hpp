#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agenttrace/corruption.hpp"
#include "agenttrace/errors.hpp"
#include "agenttrace/keys.hpp"
#include "agenttrace/scorer.hpp"
#include "agenttrace/segmenter.hpp"
#include "agenttrace/trace.hpp"
#include "agenttrace/transition_graph.hpp"

namespace agenttrace {

using json = nlohmann::json;

/// FNV-1a 64-bit digest; stable content fingerprint for run manifests.
inline std::uint64_t fnv1a(std::span<const char> bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write-temp-then-rename so concurrent readers never observe a partial
/// file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw io_error("short write: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp.string() + " to " + path.string());
}

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw format_error(what + ": malformed JSON");
  return j;
}

inline json load_json(const std::filesystem::path& path) {
  return parse_json(read_file(path), path.string());
}

namespace detail {

inline const json& require_field(const json& j, const char* field, const std::string& what) {
  if (!j.is_object() || !j.contains(field)) {
    throw format_error(what + ": missing field '" + field + "'");
  }
  return j.at(field);
}

}  // namespace detail

// -- Trace files -------------------------------------------------------------

inline json trace_to_json(const Trace& trace) {
  json gt = json::array();
  for (const GroundSegment& seg : trace.ground_truth) {
    gt.push_back(json::array({seg.start, seg.end, seg.agent_id}));
  }
  return json{{"vocab_size", trace.vocab_size},
              {"tokens", trace.tokens},
              {"ground_truth", gt},
              {"seed", trace.seed}};
}

inline Trace trace_from_json(const json& j, const std::string& what) {
  Trace trace;
  try {
    trace.vocab_size = detail::require_field(j, "vocab_size", what).get<std::uint32_t>();
    trace.tokens = detail::require_field(j, "tokens", what).get<std::vector<std::uint32_t>>();
    trace.seed = detail::require_field(j, "seed", what).get<std::uint64_t>();
    for (const json& seg : detail::require_field(j, "ground_truth", what)) {
      if (!seg.is_array() || seg.size() != 3) {
        throw format_error(what + ": field 'ground_truth' entries must be [start, end, agent_id]");
      }
      trace.ground_truth.push_back(GroundSegment{seg.at(0).get<std::uint64_t>(),
                                                 seg.at(1).get<std::uint64_t>(),
                                                 seg.at(2).get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw format_error(what + ": " + e.what());
  }
  try {
    trace.validate();
  } catch (const std::invalid_argument& e) {
    throw format_error(what + ": " + e.what());
  }
  return trace;
}

inline void save_trace(const Trace& trace, const std::filesystem::path& path) {
  atomic_write(path, trace_to_json(trace).dump(2) + "\n");
}

inline Trace load_trace(const std::filesystem::path& path) {
  return trace_from_json(load_json(path), path.string());
}

// -- Key manifests -----------------------------------------------------------

inline json keys_to_json(std::span<const AgentKey> keys) {
  json out = json::array();
  for (const AgentKey& k : keys) {
    out.push_back(json{{"agent_id", k.agent_id},
                       {"watermark_id", k.watermark_id},
                       {"k_p_order", k.k_p_order},
                       {"kappa", k.kappa},
                       {"n_gram", k.n_gram}});
  }
  return out;
}

inline std::vector<AgentKey> keys_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw format_error(what + ": key manifest must be a JSON array");
  std::vector<AgentKey> keys;
  try {
    for (const json& e : j) {
      AgentKey k;
      k.agent_id = detail::require_field(e, "agent_id", what).get<std::string>();
      k.watermark_id = detail::require_field(e, "watermark_id", what).get<std::uint64_t>();
      k.k_p_order = detail::require_field(e, "k_p_order", what).get<int>();
      k.kappa = detail::require_field(e, "kappa", what).get<double>();
      k.n_gram = detail::require_field(e, "n_gram", what).get<int>();
      k.validate();
      keys.push_back(std::move(k));
    }
  } catch (const json::exception& e) {
    throw format_error(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw format_error(what + ": " + e.what());
  }
  if (keys.empty()) throw format_error(what + ": key manifest must list at least one agent");
  return keys;
}

inline void save_keys(std::span<const AgentKey> keys, const std::filesystem::path& path) {
  atomic_write(path, keys_to_json(keys).dump(2) + "\n");
}

inline std::vector<AgentKey> load_keys(const std::filesystem::path& path) {
  return keys_from_json(load_json(path), path.string());
}

// -- Attribution records -----------------------------------------------------

inline json attribution_to_json(const SegmentAttribution& attr) {
  json segs = json::array();
  for (const AttributedSegment& s : attr.segments) {
    segs.push_back(json::array({s.start, s.end, s.agent_id, s.confidence}));
  }
  return json{{"boundaries", attr.boundaries},
              {"segments", segs},
              {"trace_length", attr.trace_length}};
}

inline SegmentAttribution attribution_from_json(const json& j, const std::string& what,
                                                std::span<const std::string> agent_order = {}) {
  SegmentAttribution attr;
  try {
    attr.boundaries =
        detail::require_field(j, "boundaries", what).get<std::vector<std::uint64_t>>();
    attr.trace_length = detail::require_field(j, "trace_length", what).get<std::uint64_t>();
    for (const json& seg : detail::require_field(j, "segments", what)) {
      if (!seg.is_array() || seg.size() != 4) {
        throw format_error(what +
                           ": field 'segments' entries must be [start, end, agent_id, confidence]");
      }
      AttributedSegment s;
      s.start = seg.at(0).get<std::uint64_t>();
      s.end = seg.at(1).get<std::uint64_t>();
      s.agent_id = seg.at(2).get<std::string>();
      s.confidence = seg.at(3).get<double>();
      for (std::size_t a = 0; a < agent_order.size(); ++a) {
        if (agent_order[a] == s.agent_id) s.agent_index = static_cast<std::uint32_t>(a);
      }
      attr.segments.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw format_error(what + ": " + e.what());
  }
  return attr;
}

// -- Graph reports -----------------------------------------------------------

inline json graph_to_json(const TransitionGraph& g) {
  const std::uint32_t k = g.agent_count;
  json adjacency = json::array();
  json confidence = json::array();
  for (std::uint32_t i = 0; i < k; ++i) {
    json arow = json::array();
    json crow = json::array();
    for (std::uint32_t j = 0; j < k; ++j) {
      arow.push_back(static_cast<int>(g.adjacency[static_cast<std::size_t>(i) * k + j]));
      crow.push_back(g.confidence[static_cast<std::size_t>(i) * k + j]);
    }
    adjacency.push_back(arow);
    confidence.push_back(crow);
  }
  return json{{"K", k},
              {"adjacency", adjacency},
              {"confidence", confidence},
              {"mu", g.mu},
              {"topology_class", to_string(g.topology_class)}};
}

inline TransitionGraph graph_from_json(const json& j, const std::string& what) {
  TransitionGraph g;
  try {
    g.agent_count = detail::require_field(j, "K", what).get<std::uint32_t>();
    const std::uint32_t k = g.agent_count;
    g.adjacency.assign(static_cast<std::size_t>(k) * k, 0);
    g.confidence.assign(static_cast<std::size_t>(k) * k, 0.0);
    const json& adjacency = detail::require_field(j, "adjacency", what);
    const json& confidence = detail::require_field(j, "confidence", what);
    if (adjacency.size() != k || confidence.size() != k) {
      throw format_error(what + ": adjacency/confidence must be K x K");
    }
    for (std::uint32_t i = 0; i < k; ++i) {
      for (std::uint32_t jj = 0; jj < k; ++jj) {
        g.adjacency[static_cast<std::size_t>(i) * k + jj] =
            adjacency.at(i).at(jj).get<int>() ? 1 : 0;
        g.confidence[static_cast<std::size_t>(i) * k + jj] = confidence.at(i).at(jj).get<double>();
      }
    }
    g.mu = detail::require_field(j, "mu", what).get<std::uint64_t>();
    const std::string topo = detail::require_field(j, "topology_class", what).get<std::string>();
    g.topology_class = Topology::kOther;
    for (Topology t : {Topology::kChain, Topology::kStarPure, Topology::kStarRing, Topology::kTree,
                       Topology::kCircle, Topology::kComplete, Topology::kOther}) {
      if (to_string(t) == topo) g.topology_class = t;
    }
  } catch (const json::exception& e) {
    throw format_error(what + ": " + e.what());
  }
  return g;
}

// -- Structured logs ---------------------------------------------------------

inline json log_to_json(const StructuredLog& log) {
  json turns = json::array();
  for (const Turn& t : log.turns) {
    json jt{{"role", to_string(t.role)}, {"name", t.name}};
    if (!t.tokens.empty() || t.text.empty()) {
      jt["tokens"] = t.tokens;
    } else {
      jt["text"] = t.text;
    }
    turns.push_back(jt);
  }
  json j{{"turns", turns},
         {"question", log.question},
         {"ground_truth", log.ground_truth},
         {"vocab_size", log.vocab_size}};
  if (log.system_prompt) j["system_prompt"] = *log.system_prompt;
  if (log.mistake_agent) j["mistake_agent"] = *log.mistake_agent;
  if (log.mistake_step) j["mistake_step"] = *log.mistake_step;
  return j;
}

inline StructuredLog log_from_json(const json& j, const std::string& what) {
  StructuredLog log;
  try {
    for (const json& jt : detail::require_field(j, "turns", what)) {
      Turn t;
      t.role = role_from_string(detail::require_field(jt, "role", what).get<std::string>());
      t.name = detail::require_field(jt, "name", what).get<std::string>();
      if (jt.contains("tokens")) t.tokens = jt.at("tokens").get<std::vector<std::uint32_t>>();
      if (jt.contains("text")) t.text = jt.at("text").get<std::string>();
      log.turns.push_back(std::move(t));
    }
    log.question = detail::require_field(j, "question", what).get<std::string>();
    log.ground_truth = detail::require_field(j, "ground_truth", what).get<std::string>();
    log.vocab_size = detail::require_field(j, "vocab_size", what).get<std::uint32_t>();
    if (j.contains("system_prompt")) log.system_prompt = j.at("system_prompt").get<std::string>();
    if (j.contains("mistake_agent")) log.mistake_agent = j.at("mistake_agent").get<std::string>();
    if (j.contains("mistake_step")) log.mistake_step = j.at("mistake_step").get<std::size_t>();
  } catch (const json::exception& e) {
    throw format_error(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw format_error(what + ": " + e.what());
  }
  try {
    log.validate();
  } catch (const std::invalid_argument& e) {
    throw format_error(what + ": " + e.what());
  }
  return log;
}

inline void save_log(const StructuredLog& log, const std::filesystem::path& path) {
  atomic_write(path, log_to_json(log).dump(2) + "\n");
}

inline StructuredLog load_log(const std::filesystem::path& path) {
  return log_from_json(load_json(path), path.string());
}

// -- Score-field dumps -------------------------------------------------------

inline std::string score_field_csv(const ScoreField& field) {
  std::ostringstream out;
  out << "t,agent_id,f\n";
  for (std::size_t w = 0; w < field.num_windows(); ++w) {
    for (std::size_t a = 0; a < field.num_agents(); ++a) {
      out << field.window_starts[w] << ',' << field.agents[a] << ','
          << json(field.at(w, a)).dump() << '\n';
    }
  }
  return out.str();
}

}  // namespace agenttrace
