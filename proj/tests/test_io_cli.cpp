#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "agenttrace/commands.hpp"
#include "agenttrace/serialization.hpp"

using namespace agenttrace;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("agenttrace_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// All regular files under a directory except run manifests, keyed by
/// relative path, valued by content bytes.
std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "run_manifest.json") continue;
    out[fs::relative(entry.path(), dir).string()] = read_file(entry.path());
  }
  return out;
}

}  // namespace

TEST_CASE("trace files round-trip losslessly", "[io_cli]") {
  const fs::path dir = temp_dir("trace_rt");
  Trace trace;
  trace.vocab_size = 64;
  trace.seed = 99;
  trace.tokens = {1, 2, 3, 4, 5, 6, 7, 8};
  trace.ground_truth = {{0, 5, "a1"}, {5, 8, "a2"}};
  save_trace(trace, dir / "t.json");
  CHECK(load_trace(dir / "t.json") == trace);
}

TEST_CASE("key manifests round-trip and validate", "[io_cli]") {
  const fs::path dir = temp_dir("keys_rt");
  const auto keys = make_keys(default_agent_ids(4));
  save_keys(keys, dir / "keys.json");
  const auto loaded = load_keys(dir / "keys.json");
  REQUIRE(loaded.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(loaded[i].agent_id == keys[i].agent_id);
    CHECK(loaded[i].watermark_id == keys[i].watermark_id);
    CHECK(loaded[i].kappa == keys[i].kappa);
    CHECK(loaded[i].n_gram == keys[i].n_gram);
  }
  atomic_write(dir / "bad.json", "[{\"agent_id\": \"a1\"}]\n");
  CHECK_THROWS_AS(load_keys(dir / "bad.json"), format_error);
  atomic_write(dir / "empty.json", "[]\n");
  CHECK_THROWS_AS(load_keys(dir / "empty.json"), format_error);
  CHECK_THROWS_AS(load_keys(dir / "missing.json"), io_error);
}

TEST_CASE("attribution and graph records round-trip", "[io_cli]") {
  SegmentAttribution attr;
  attr.trace_length = 100;
  attr.boundaries = {40};
  attr.segments = {{0, 40, 0, "a1", 1.0}, {40, 100, 1, "a2", 0.83}};
  const json aj = attribution_to_json(attr);
  const SegmentAttribution attr2 =
      attribution_from_json(aj, "mem", std::vector<std::string>{"a1", "a2"});
  CHECK(attr2 == attr);

  TransitionGraph g;
  g.agent_count = 2;
  g.adjacency = {0, 1, 1, 0};
  g.confidence = {0.0, 0.9, 0.7, 0.0};
  g.mu = encode_bitmask(g.adjacency, 2);
  g.topology_class = Topology::kChain;
  const TransitionGraph g2 = graph_from_json(graph_to_json(g), "mem");
  CHECK(g2 == g);
}

TEST_CASE("structured logs round-trip with optional fields", "[io_cli]") {
  const fs::path dir = temp_dir("log_rt");
  StructuredLog log;
  log.vocab_size = 32;
  log.question = "q";
  log.ground_truth = "gt";
  log.system_prompt = "sp";
  log.mistake_agent = "a2";
  log.mistake_step = 1;
  Turn human;
  human.role = Role::kHuman;
  human.name = "User";
  human.text = "hello there";
  Turn agent;
  agent.role = Role::kAssistant;
  agent.name = "a2";
  agent.tokens = {4, 5, 6};
  log.turns = {human, agent};
  save_log(log, dir / "log.json");
  CHECK(load_log(dir / "log.json") == log);

  StructuredLog bare;
  bare.vocab_size = 8;
  bare.turns = {agent};
  save_log(bare, dir / "bare.json");
  CHECK(load_log(dir / "bare.json") == bare);

  atomic_write(dir / "broken.json", "{\"turns\": [{\"role\": \"assistant\"}]}\n");
  CHECK_THROWS_AS(load_log(dir / "broken.json"), format_error);
  atomic_write(dir / "notjson.json", "{{{\n");
  CHECK_THROWS_AS(load_log(dir / "notjson.json"), format_error);
}

TEST_CASE("format errors name the offending field", "[io_cli]") {
  const fs::path dir = temp_dir("field_names");
  atomic_write(dir / "t.json", "{\"tokens\": [1,2]}\n");
  try {
    load_trace(dir / "t.json");
    FAIL("expected format_error");
  } catch (const format_error& e) {
    CHECK(std::string(e.what()).find("vocab_size") != std::string::npos);
  }
}

TEST_CASE("generate writes a dataset with manifest and keys", "[io_cli]") {
  const fs::path dir = temp_dir("gen");
  GenerateOptions opts;
  opts.topology = "chain";
  opts.agents = 3;
  opts.rounds = 1;
  opts.n_traces = 3;
  opts.vocab_size = 64;
  opts.segment_min = 96;
  opts.segment_max = 128;
  opts.seed = 7;
  opts.emit_logs = true;
  opts.out_dir = dir;
  const auto outputs = cmd_generate(opts);
  REQUIRE(outputs.size() == 3);
  for (const auto& p : outputs) CHECK(fs::exists(p));
  CHECK(fs::exists(dir / "keys.json"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "run_manifest.json"));
  CHECK(fs::exists(dir / "log_0000.json"));

  const json manifest = load_json(dir / "manifest.json");
  CHECK(manifest.at("traces").size() == 3);
  const Trace t0 = load_trace(outputs[0]);
  CHECK(t0.vocab_size == 64);
  CHECK(t0.ground_truth.size() == 3);

  // The structured log mirrors the trace segments.
  const StructuredLog log0 = load_log(dir / "log_0000.json");
  CHECK(log0.turns.size() == 3);
  CHECK(log0.turns[0].name == t0.ground_truth[0].agent_id);
}

TEST_CASE("pipeline outputs are byte-identical across reruns", "[io_cli]") {
  const fs::path dir_a = temp_dir("det_a");
  const fs::path dir_b = temp_dir("det_b");

  for (const fs::path& dir : {dir_a, dir_b}) {
    GenerateOptions gen;
    gen.topology = "chain";
    gen.agents = 3;
    gen.rounds = 2;
    gen.n_traces = 3;
    gen.vocab_size = 256;
    gen.segment_min = 192;
    gen.segment_max = 256;
    gen.seed = 11;
    gen.emit_logs = true;
    gen.out_dir = dir / "dataset";
    const auto traces = cmd_generate(gen);

    TraceOptions det;
    det.inputs = traces;
    det.keys_path = (dir / "dataset" / "keys.json").string();
    det.out_dir = dir / "detection";
    det.dump_scores = true;
    cmd_trace(det);

    CorruptOptions cor;
    cor.inputs = {dir / "dataset" / "log_0000.json"};
    cor.mode = "boundary";
    cor.seed = 42;
    cor.out_dir = dir / "corrupted";
    cmd_corrupt(cor);

    RestoreOptions res;
    res.inputs = {dir / "corrupted" / "log_0000_corrupted.json"};
    res.keys_path = det.keys_path;
    res.out_dir = dir / "restored";
    cmd_restore(res);

    EvalOptions ev;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const std::string stem = traces[i].stem().string();
      ev.pred.push_back(dir / "detection" / (stem + "_attr.json"));
      ev.graphs.push_back(dir / "detection" / (stem + "_graph.json"));
      ev.truth.push_back(traces[i]);
    }
    ev.out_dir = dir / "eval";
    cmd_eval(ev);
  }

  CHECK(tree_bytes(dir_a) == tree_bytes(dir_b));
}

TEST_CASE("eval of predictions equal to truth scores one", "[io_cli]") {
  const fs::path dir = temp_dir("eval_perfect");
  GenerateOptions gen;
  gen.topology = "chain";
  gen.agents = 3;
  gen.rounds = 1;
  gen.n_traces = 2;
  gen.vocab_size = 64;
  gen.segment_min = 64;
  gen.segment_max = 96;
  gen.seed = 3;
  gen.out_dir = dir / "dataset";
  const auto traces = cmd_generate(gen);

  // Predictions copied from ground truth.
  EvalOptions ev;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Trace t = load_trace(traces[i]);
    SegmentAttribution attr;
    attr.trace_length = t.tokens.size();
    for (const auto& seg : t.ground_truth) {
      attr.segments.push_back(AttributedSegment{
          seg.start, seg.end, 0, seg.agent_id, 1.0});
      if (seg.start > 0) attr.boundaries.push_back(seg.start);
    }
    const fs::path pred = dir / ("pred_" + std::to_string(i) + "_attr.json");
    atomic_write(pred, attribution_to_json(attr).dump(2) + "\n");
    ev.pred.push_back(pred);
    ev.truth.push_back(traces[i]);
  }
  ev.out_dir = dir / "eval";
  cmd_eval(ev);
  const json report = load_json(dir / "eval" / "report.json");
  CHECK(report.at("aggregate").at("token_acc").at("mean").get<double>() == 1.0);
  CHECK(report.at("aggregate").at("iou").at("mean").get<double>() == 1.0);
}

TEST_CASE("corrupt runs are deterministic per seed", "[io_cli]") {
  const fs::path dir = temp_dir("corrupt_det");
  GenerateOptions gen;
  gen.topology = "chain";
  gen.agents = 3;
  gen.rounds = 1;
  gen.n_traces = 1;
  gen.vocab_size = 64;
  gen.segment_min = 64;
  gen.segment_max = 96;
  gen.seed = 5;
  gen.emit_logs = true;
  gen.out_dir = dir / "dataset";
  cmd_generate(gen);

  for (const char* sub : {"c1", "c2"}) {
    CorruptOptions cor;
    cor.inputs = {dir / "dataset" / "log_0000.json"};
    cor.mode = "boundary";
    cor.seed = 42;
    cor.out_dir = dir / sub;
    cmd_corrupt(cor);
  }
  CHECK(read_file(dir / "c1" / "log_0000_corrupted.json") ==
        read_file(dir / "c2" / "log_0000_corrupted.json"));
}

TEST_CASE("score csv dumps are well-formed", "[io_cli]") {
  ScoreField field;
  field.window_tokens = 8;
  field.step_tokens = 4;
  field.agents = {"a1", "a2"};
  field.window_starts = {0, 4};
  field.values = {0.1, 0.2, 0.3, 0.4};
  field.trace_length = 12;
  const std::string csv = score_field_csv(field);
  CHECK(csv.find("t,agent_id,f\n") == 0);
  CHECK(csv.find("0,a1,0.1") != std::string::npos);
  CHECK(csv.find("4,a2,0.4") != std::string::npos);
}

TEST_CASE("digests and atomic writes behave", "[io_cli]") {
  const fs::path dir = temp_dir("atomic");
  atomic_write(dir / "x.txt", "hello");
  CHECK(read_file(dir / "x.txt") == "hello");
  CHECK_FALSE(fs::exists(dir / "x.txt.tmp"));
  const std::string payload = "hello";
  CHECK(fnv1a(std::span<const char>(payload.data(), payload.size())) ==
        fnv1a(std::span<const char>(payload.data(), payload.size())));
}
