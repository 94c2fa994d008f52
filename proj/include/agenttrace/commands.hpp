#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agenttrace/baselines.hpp"
#include "agenttrace/corruption.hpp"
#include "agenttrace/errors.hpp"
#include "agenttrace/evaluation.hpp"
#include "agenttrace/pipeline.hpp"
#include "agenttrace/serialization.hpp"
#include "agenttrace/simulator.hpp"
#include "agenttrace/token_source.hpp"

namespace agenttrace {

namespace fs = std::filesystem;

/// Run `fn(i)` for i in [0, n) on a bounded pool. Each index must touch
/// disjoint state; exceptions propagate after all workers join.
template <typename Fn>
void for_each_parallel(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  const auto worker = [&](std::size_t w) {
    try {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker, static_cast<std::size_t>(w));
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace detail {

inline std::string zero_pad(std::size_t value, int width = 4) {
  std::ostringstream ss;
  ss << std::setw(width) << std::setfill('0') << value;
  return ss.str();
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) throw io_error("cannot create directory: " + dir.string());
}

}  // namespace detail

/// Config echo plus content digests of every file a command read and
/// wrote. The timestamp lives only here, so output trees stay reproducible
/// byte for byte.
inline void write_run_manifest(const fs::path& out_dir, const std::string& command,
                               const json& options_echo, const std::vector<fs::path>& inputs,
                               const std::vector<fs::path>& outputs) {
  json manifest;
  manifest["command"] = command;
  manifest["options"] = options_echo;
  json in = json::array();
  for (const fs::path& p : inputs) {
    const std::string content = read_file(p);
    in.push_back(json{{"path", p.string()},
                      {"fnv64", fnv1a(std::span<const char>(content.data(), content.size()))}});
  }
  json out = json::array();
  for (const fs::path& p : outputs) {
    const std::string content = read_file(p);
    out.push_back(json{{"path", p.string()},
                       {"fnv64", fnv1a(std::span<const char>(content.data(), content.size()))}});
  }
  manifest["inputs"] = in;
  manifest["outputs"] = out;
  manifest["timestamp_utc"] = static_cast<std::int64_t>(std::time(nullptr));
  atomic_write(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
}

// -- generate ----------------------------------------------------------------

struct SourceOptions {
  std::string kind = "uniform";  // uniform | zipfian | ngram
  double zipf_exponent = 1.0;
  std::string corpus_path;       // whitespace-separated token ids
  int ngram_order = 2;
  double smoothing = 0.1;
};

inline TokenDistributionSource make_source(const SourceOptions& opts, std::uint32_t vocab_size) {
  if (opts.kind == "uniform") return TokenDistributionSource::uniform(vocab_size);
  if (opts.kind == "zipfian") {
    return TokenDistributionSource::zipfian(vocab_size, opts.zipf_exponent);
  }
  if (opts.kind == "ngram") {
    if (opts.corpus_path.empty()) {
      throw std::invalid_argument("source.corpus_path is required for the ngram source");
    }
    std::vector<std::uint32_t> corpus;
    std::istringstream in(read_file(opts.corpus_path));
    std::uint64_t tok;
    while (in >> tok) corpus.push_back(static_cast<std::uint32_t>(tok));
    return train_ngram(corpus, opts.ngram_order, vocab_size, opts.smoothing);
  }
  throw std::invalid_argument("source.kind must be uniform, zipfian, or ngram");
}

struct GenerateOptions {
  std::string topology = "chain";
  std::uint32_t agents = 4;
  std::uint32_t rounds = 2;
  std::size_t n_traces = 100;
  std::uint32_t vocab_size = 256;
  double kappa = 2.0;
  int n_gram = 2;
  std::uint64_t watermark_base = kWatermarkIdBase;
  std::uint64_t segment_min = 128;
  std::uint64_t segment_max = 384;
  std::uint64_t seed = 0;
  SourceOptions source;
  std::string keys_path;  // optional pre-existing manifest
  bool emit_logs = false;
  fs::path out_dir;
  int workers = 1;

  json echo() const {
    return json{{"topology", topology},  {"agents", agents},
                {"rounds", rounds},      {"n_traces", n_traces},
                {"vocab_size", vocab_size}, {"kappa", kappa},
                {"n_gram", n_gram},      {"watermark_base", watermark_base},
                {"segment_min", segment_min}, {"segment_max", segment_max},
                {"seed", seed},          {"source_kind", source.kind},
                {"zipf_exponent", source.zipf_exponent}, {"emit_logs", emit_logs}};
  }
};

/// Structured log mirroring a trace's ground-truth segments, one assistant
/// turn per segment.
inline StructuredLog log_from_trace(const Trace& trace) {
  StructuredLog log;
  log.vocab_size = trace.vocab_size;
  log.question = "task";
  log.ground_truth = "reference";
  if (trace.ground_truth.size() > 1) {
    // Synthetic failure annotation: the middle turn is marked decisive.
    log.mistake_step = trace.ground_truth.size() / 2;
    log.mistake_agent = trace.ground_truth[*log.mistake_step].agent_id;
  }
  for (const GroundSegment& seg : trace.ground_truth) {
    Turn t;
    t.role = Role::kAssistant;
    t.name = seg.agent_id;
    t.tokens.assign(trace.tokens.begin() + static_cast<std::ptrdiff_t>(seg.start),
                    trace.tokens.begin() + static_cast<std::ptrdiff_t>(seg.end));
    log.turns.push_back(std::move(t));
  }
  return log;
}

inline std::vector<fs::path> cmd_generate(const GenerateOptions& opts) {
  if (opts.segment_max < opts.segment_min) {
    throw std::invalid_argument("segment_max must be >= segment_min");
  }
  detail::ensure_dir(opts.out_dir);

  std::vector<AgentKey> keys;
  if (!opts.keys_path.empty()) {
    keys = load_keys(opts.keys_path);
  } else {
    keys = make_keys(default_agent_ids(opts.agents), opts.watermark_base, 1, opts.kappa,
                     opts.n_gram);
  }
  if (keys.size() < opts.agents) {
    throw std::invalid_argument("key manifest lists fewer agents than requested");
  }
  const fs::path keys_file = opts.out_dir / "keys.json";
  save_keys(keys, keys_file);

  const TokenDistributionSource source = make_source(opts.source, opts.vocab_size);
  TopologySpec spec;
  spec.pattern = pattern_from_string(opts.topology);
  spec.agent_count = opts.agents;
  spec.rounds = opts.rounds;
  spec.segment_min = opts.segment_min;
  spec.segment_max = opts.segment_max;
  spec.seed = opts.seed;

  std::vector<std::string> ids;
  for (std::uint32_t a = 0; a < opts.agents; ++a) ids.push_back(keys[a].agent_id);

  std::vector<fs::path> outputs(opts.n_traces);
  std::vector<fs::path> log_outputs(opts.emit_logs ? opts.n_traces : 0);
  for_each_parallel(opts.n_traces, opts.workers, [&](std::size_t i) {
    TopologySpec per_trace = spec;
    per_trace.seed = spec.seed + i;
    const GenerationSchedule schedule = build_schedule(per_trace, ids);
    const Trace trace = generate_trace(source, keys, schedule, per_trace.seed);
    const fs::path path = opts.out_dir / ("trace_" + detail::zero_pad(i) + ".json");
    save_trace(trace, path);
    outputs[i] = path;
    if (opts.emit_logs) {
      const fs::path log_path = opts.out_dir / ("log_" + detail::zero_pad(i) + ".json");
      save_log(log_from_trace(trace), log_path);
      log_outputs[i] = log_path;
    }
  });

  // Dataset manifest: the spec echo plus the file list.
  json manifest;
  manifest["spec"] = opts.echo();
  json files = json::array();
  for (const fs::path& p : outputs) files.push_back(p.filename().string());
  manifest["traces"] = files;
  if (opts.emit_logs) {
    json logs = json::array();
    for (const fs::path& p : log_outputs) logs.push_back(p.filename().string());
    manifest["logs"] = logs;
  }
  manifest["keys"] = keys_file.filename().string();
  atomic_write(opts.out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::vector<fs::path> all = outputs;
  all.insert(all.end(), log_outputs.begin(), log_outputs.end());
  all.push_back(keys_file);
  all.push_back(opts.out_dir / "manifest.json");
  write_run_manifest(opts.out_dir, "generate", opts.echo(), {}, all);
  return outputs;
}

// -- trace (detection) -------------------------------------------------------

struct TraceOptions {
  std::vector<fs::path> inputs;
  std::string keys_path;
  DetectorParams detector;
  bool dump_scores = false;
  fs::path out_dir;
  int workers = 1;

  json echo() const {
    return json{{"keys", keys_path},
                {"window", detector.window_tokens},
                {"step", detector.step_tokens},
                {"smooth_win", detector.smooth_win},
                {"local_radius", detector.boundary.local_radius},
                {"min_points_for_pair", detector.boundary.min_points_for_pair},
                {"tau_c", detector.boundary.tau_c},
                {"confidence_h", detector.confidence_h},
                {"dump_scores", dump_scores}};
  }
};

inline std::vector<fs::path> cmd_trace(const TraceOptions& opts) {
  if (opts.inputs.empty()) throw std::invalid_argument("no trace files given");
  detail::ensure_dir(opts.out_dir);
  const std::vector<AgentKey> keys = load_keys(opts.keys_path);

  std::vector<std::vector<fs::path>> outputs(opts.inputs.size());
  for_each_parallel(opts.inputs.size(), opts.workers, [&](std::size_t i) {
    const Trace trace = load_trace(opts.inputs[i]);
    PermutationCache cache;
    DetectionResult result = run_detection(trace, keys, opts.detector, &cache);
    const std::string stem = opts.inputs[i].stem().string();
    const fs::path attr_path = opts.out_dir / (stem + "_attr.json");
    const fs::path graph_path = opts.out_dir / (stem + "_graph.json");
    atomic_write(attr_path, attribution_to_json(result.attribution).dump(2) + "\n");
    atomic_write(graph_path, graph_to_json(result.graph).dump(2) + "\n");
    outputs[i] = {attr_path, graph_path};
    if (opts.dump_scores) {
      const fs::path csv_path = opts.out_dir / (stem + "_scores.csv");
      atomic_write(csv_path, score_field_csv(result.field));
      outputs[i].push_back(csv_path);
    }
  });

  std::vector<fs::path> flat;
  for (const auto& group : outputs) flat.insert(flat.end(), group.begin(), group.end());
  write_run_manifest(opts.out_dir, "trace", opts.echo(), opts.inputs, flat);
  return flat;
}

// -- corrupt -----------------------------------------------------------------

struct CorruptOptions {
  std::vector<fs::path> inputs;
  std::string mode = "remove-id";  // remove-id | boundary | pii
  std::uint64_t seed = 42;
  double pii_rate = 0.05;
  std::uint32_t pii_placeholder = 0;
  fs::path out_dir;
  int workers = 1;

  json echo() const {
    return json{{"mode", mode},
                {"seed", seed},
                {"pii_rate", pii_rate},
                {"pii_placeholder", pii_placeholder}};
  }
};

inline std::vector<fs::path> cmd_corrupt(const CorruptOptions& opts) {
  if (opts.inputs.empty()) throw std::invalid_argument("no log files given");
  if (opts.mode != "remove-id" && opts.mode != "boundary" && opts.mode != "pii") {
    throw std::invalid_argument("mode must be remove-id, boundary, or pii");
  }
  detail::ensure_dir(opts.out_dir);

  std::vector<fs::path> outputs(opts.inputs.size());
  for_each_parallel(opts.inputs.size(), opts.workers, [&](std::size_t i) {
    StructuredLog log = load_log(opts.inputs[i]);
    if (opts.mode == "remove-id") {
      log = remove_ids(std::move(log));
    } else if (opts.mode == "boundary") {
      log = corrupt_boundaries(std::move(log), opts.seed + i);
    } else {
      for (Turn& turn : log.turns) {
        if (!turn.tokens.empty()) {
          turn.tokens = redact_tokens(turn.tokens, opts.pii_rate, opts.pii_placeholder,
                                      opts.seed + i);
        } else if (!turn.text.empty()) {
          turn.text = redact_pii(turn.text);
        }
      }
    }
    const fs::path path = opts.out_dir / (opts.inputs[i].stem().string() + "_corrupted.json");
    save_log(log, path);
    outputs[i] = path;
  });
  write_run_manifest(opts.out_dir, "corrupt", opts.echo(), opts.inputs, outputs);
  return outputs;
}

// -- restore -----------------------------------------------------------------

struct RestoreOptions {
  std::vector<fs::path> inputs;
  std::string keys_path;
  DetectorParams detector;
  fs::path out_dir;
  int workers = 1;

  json echo() const {
    return json{{"keys", keys_path},
                {"window", detector.window_tokens},
                {"step", detector.step_tokens},
                {"tau_c", detector.boundary.tau_c}};
  }
};

inline std::vector<fs::path> cmd_restore(const RestoreOptions& opts) {
  if (opts.inputs.empty()) throw std::invalid_argument("no log files given");
  detail::ensure_dir(opts.out_dir);
  const std::vector<AgentKey> keys = load_keys(opts.keys_path);

  std::vector<fs::path> outputs(opts.inputs.size());
  for_each_parallel(opts.inputs.size(), opts.workers, [&](std::size_t i) {
    const StructuredLog log = load_log(opts.inputs[i]);
    PermutationCache cache;
    const StructuredLog restored = restore(log, keys, opts.detector, &cache);
    const fs::path path = opts.out_dir / (opts.inputs[i].stem().string() + "_restored.json");
    save_log(restored, path);
    outputs[i] = path;
  });
  write_run_manifest(opts.out_dir, "restore", opts.echo(), opts.inputs, outputs);
  return outputs;
}

// -- eval --------------------------------------------------------------------

struct EvalOptions {
  std::vector<fs::path> pred;   // attribution records or restored logs
  std::vector<fs::path> truth;  // trace files or original logs, same order
  std::vector<fs::path> graphs; // optional graph reports matching pred order
  fs::path out_dir;

  json echo() const {
    return json{{"pairs", pred.size()}, {"graphs", graphs.size()}};
  }
};

struct TraceEvalRow {
  std::string id;
  double token_acc = 0.0;
  double iou = 0.0;
  std::optional<double> edge_sim;
  std::optional<double> agent_restore;
  std::optional<double> step_restore;
};

struct EvalReport {
  std::vector<TraceEvalRow> rows;
  json config_echo;

  static double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
  static double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  }

  json to_json() const {
    json out;
    out["config"] = config_echo;
    json per_trace = json::array();
    std::vector<double> accs, ious, edges, agents, steps;
    for (const TraceEvalRow& r : rows) {
      json row{{"id", r.id}, {"token_acc", r.token_acc}, {"iou", r.iou}};
      accs.push_back(r.token_acc);
      ious.push_back(r.iou);
      if (r.edge_sim) {
        row["edge_sim"] = *r.edge_sim;
        edges.push_back(*r.edge_sim);
      }
      if (r.agent_restore) {
        row["agent_restore"] = *r.agent_restore;
        agents.push_back(*r.agent_restore);
      }
      if (r.step_restore) {
        row["step_restore"] = *r.step_restore;
        steps.push_back(*r.step_restore);
      }
      per_trace.push_back(row);
    }
    out["per_trace"] = per_trace;
    json agg;
    agg["token_acc"] = json{{"mean", mean_of(accs)}, {"sd", sd_of(accs)}};
    agg["iou"] = json{{"mean", mean_of(ious)}, {"sd", sd_of(ious)}};
    if (!edges.empty()) agg["edge_sim"] = json{{"mean", mean_of(edges)}, {"sd", sd_of(edges)}};
    if (!agents.empty()) {
      agg["agent_restore"] = json{{"mean", mean_of(agents)}, {"sd", sd_of(agents)}};
    }
    if (!steps.empty()) {
      agg["step_restore"] = json{{"mean", mean_of(steps)}, {"sd", sd_of(steps)}};
    }
    out["aggregate"] = agg;
    return out;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "id,token_acc,iou,edge_sim,agent_restore,step_restore\n";
    const auto cell = [](const std::optional<double>& v) {
      return v ? json(*v).dump() : std::string();
    };
    for (const TraceEvalRow& r : rows) {
      out << r.id << ',' << json(r.token_acc).dump() << ',' << json(r.iou).dump() << ','
          << cell(r.edge_sim) << ',' << cell(r.agent_restore) << ',' << cell(r.step_restore)
          << '\n';
    }
    return out.str();
  }
};

namespace detail {

inline bool is_log_json(const json& j) { return j.is_object() && j.contains("turns"); }

}  // namespace detail

inline EvalReport evaluate_files(const EvalOptions& opts) {
  if (opts.pred.size() != opts.truth.size() || opts.pred.empty()) {
    throw std::invalid_argument("eval needs matching non-empty pred and truth file lists");
  }
  if (!opts.graphs.empty() && opts.graphs.size() != opts.pred.size()) {
    throw std::invalid_argument("graph file list must match pred list");
  }
  EvalReport report;
  report.config_echo = opts.echo();
  for (std::size_t i = 0; i < opts.pred.size(); ++i) {
    const json pred_json = load_json(opts.pred[i]);
    const json truth_json = load_json(opts.truth[i]);
    TraceEvalRow row;
    row.id = opts.pred[i].stem().string();

    if (detail::is_log_json(pred_json)) {
      // Restored vs original logs.
      const StructuredLog restored = log_from_json(pred_json, opts.pred[i].string());
      const StructuredLog original = log_from_json(truth_json, opts.truth[i].string());
      const RestorationAcc acc = restoration_acc(restored, original);
      row.agent_restore = acc.agent_restore;
      row.step_restore = acc.step_restore;
      // Token metrics over the per-turn name labeling.
      std::vector<std::string> pred_labels, truth_labels;
      std::vector<GroundSegment> pred_segs, truth_segs;
      std::uint64_t cursor = 0;
      for (std::size_t t = 0; t < original.turns.size(); ++t) {
        const std::uint64_t len = original.turns[t].tokens.size();
        if (len == 0) continue;
        truth_segs.push_back(GroundSegment{cursor, cursor + len, original.turns[t].name});
        cursor += len;
      }
      cursor = 0;
      for (std::size_t t = 0; t < restored.turns.size(); ++t) {
        const std::uint64_t len = restored.turns[t].tokens.size();
        if (len == 0) continue;
        pred_segs.push_back(GroundSegment{cursor, cursor + len, restored.turns[t].name});
        cursor += len;
      }
      const std::uint64_t total = cursor;
      const auto merge_adjacent = [](std::vector<GroundSegment> segs) {
        std::vector<GroundSegment> out;
        for (auto& s : segs) {
          if (!out.empty() && out.back().agent_id == s.agent_id && out.back().end == s.start) {
            out.back().end = s.end;
          } else {
            out.push_back(s);
          }
        }
        return out;
      };
      pred_segs = merge_adjacent(std::move(pred_segs));
      truth_segs = merge_adjacent(std::move(truth_segs));
      row.token_acc = token_acc(labels_from_segments(pred_segs, total),
                                labels_from_segments(truth_segs, total));
      row.iou = iou(pred_segs, truth_segs, total);
    } else {
      // Attribution record vs trace ground truth.
      const SegmentAttribution attr = attribution_from_json(pred_json, opts.pred[i].string());
      const Trace trace = trace_from_json(truth_json, opts.truth[i].string());
      if (trace.ground_truth.empty()) {
        throw format_error(opts.truth[i].string() + ": trace carries no ground_truth");
      }
      const auto pred_segs = attr.as_ground_segments();
      row.token_acc = token_acc(labels_from_segments(pred_segs, trace.tokens.size()),
                                labels_from_segments(trace.ground_truth, trace.tokens.size()));
      row.iou = iou(pred_segs, trace.ground_truth, trace.tokens.size());
      if (!opts.graphs.empty()) {
        const TransitionGraph graph =
            graph_from_json(load_json(opts.graphs[i]), opts.graphs[i].string());
        std::vector<std::string> ids;
        for (std::uint32_t a = 1; a <= graph.agent_count; ++a) {
          ids.push_back("a" + std::to_string(a));
        }
        const auto truth_m = adjacency_from_segments(trace.ground_truth, ids);
        row.edge_sim = edge_sim(truth_m, graph.confidence, graph.agent_count);
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline std::vector<fs::path> cmd_eval(const EvalOptions& opts) {
  detail::ensure_dir(opts.out_dir);
  const EvalReport report = evaluate_files(opts);
  const fs::path json_path = opts.out_dir / "report.json";
  const fs::path csv_path = opts.out_dir / "report.csv";
  atomic_write(json_path, report.to_json().dump(2) + "\n");
  atomic_write(csv_path, report.to_csv());
  std::vector<fs::path> inputs = opts.pred;
  inputs.insert(inputs.end(), opts.truth.begin(), opts.truth.end());
  inputs.insert(inputs.end(), opts.graphs.begin(), opts.graphs.end());
  write_run_manifest(opts.out_dir, "eval", opts.echo(), inputs, {json_path, csv_path});
  return {json_path, csv_path};
}

// -- baseline ----------------------------------------------------------------

struct BaselineOptions {
  std::vector<fs::path> inputs;  // trace files with ground truth
  std::string method = "viterbi";  // viterbi | oracle | random | recursive
  std::uint32_t window_tokens = 64;
  std::uint32_t step_tokens = 16;
  double stickiness = 0.9;
  std::uint64_t seed = 0;
  fs::path out_dir;
  int workers = 1;

  json echo() const {
    return json{{"method", method},
                {"window", window_tokens},
                {"step", step_tokens},
                {"stickiness", stickiness},
                {"seed", seed}};
  }
};

inline std::vector<fs::path> cmd_baseline(const BaselineOptions& opts) {
  if (opts.inputs.empty()) throw std::invalid_argument("no trace files given");
  if (opts.method != "viterbi" && opts.method != "oracle" && opts.method != "random" &&
      opts.method != "recursive") {
    throw std::invalid_argument("method must be viterbi, oracle, random, or recursive");
  }
  detail::ensure_dir(opts.out_dir);

  std::vector<fs::path> outputs(opts.inputs.size());
  for_each_parallel(opts.inputs.size(), opts.workers, [&](std::size_t i) {
    const Trace trace = load_trace(opts.inputs[i]);
    if (trace.ground_truth.empty()) {
      throw format_error(opts.inputs[i].string() + ": baseline needs trace ground_truth");
    }
    const PrototypeModel model = build_prototypes(trace);
    const auto k = static_cast<std::uint32_t>(model.agent_count());
    SegmentAttribution attr;
    if (opts.method == "oracle") {
      attr = oracle_attribute(trace, model);
    } else if (opts.method == "viterbi") {
      attr = viterbi_attribute(trace, model, opts.window_tokens, opts.step_tokens,
                               opts.stickiness);
    } else if (opts.method == "random") {
      attr = random_segment(trace, k, opts.seed + i, model.agent_ids);
    } else {
      attr = recursive_segment(trace, k, model);
    }
    const fs::path path = opts.out_dir / (opts.inputs[i].stem().string() + "_attr.json");
    atomic_write(path, attribution_to_json(attr).dump(2) + "\n");
    outputs[i] = path;
  });
  write_run_manifest(opts.out_dir, "baseline", opts.echo(), opts.inputs, outputs);
  return outputs;
}

}  // namespace agenttrace
