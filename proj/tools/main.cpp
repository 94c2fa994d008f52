#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agenttrace/commands.hpp"

namespace {

namespace fs = std::filesystem;
using namespace agenttrace;

fs::path default_out_root() {
  if (const char* env = std::getenv("AGENTTRACE_OUT")) return fs::path(env);
  return fs::path("out");
}

std::vector<fs::path> to_paths(const std::vector<std::string>& names) {
  std::vector<fs::path> out;
  out.reserve(names.size());
  for (const auto& n : names) out.emplace_back(n);
  return out;
}

/// Optional JSON config: keys mirror the long flag names; explicit flags
/// override config values.
json load_config_or_empty(const std::string& path) {
  if (path.empty()) return json::object();
  const json j = load_json(path);
  if (!j.is_object()) throw format_error(path + ": config must be a JSON object");
  return j;
}

template <typename T>
void take(const json& cfg, const char* key, T& slot, const CLI::Option* opt) {
  if (opt != nullptr && opt->count() > 0) return;  // explicit flag wins
  if (cfg.contains(key)) slot = cfg.at(key).get<T>();
}

int dispatch(CLI::App& app) {
  // generate -----------------------------------------------------------
  auto* gen = app.get_subcommand("generate");
  if (gen->parsed()) {
    GenerateOptions opts;
    std::string config_path, out_dir;
    config_path = gen->get_option("--config")->as<std::string>();
    const json cfg = load_config_or_empty(config_path);
    take(cfg, "topology", opts.topology, gen->get_option("--topology"));
    take(cfg, "agents", opts.agents, gen->get_option("--agents"));
    take(cfg, "rounds", opts.rounds, gen->get_option("--rounds"));
    take(cfg, "n-traces", opts.n_traces, gen->get_option("--n-traces"));
    take(cfg, "vocab", opts.vocab_size, gen->get_option("--vocab"));
    take(cfg, "kappa", opts.kappa, gen->get_option("--kappa"));
    take(cfg, "n-gram", opts.n_gram, gen->get_option("--n-gram"));
    take(cfg, "watermark-base", opts.watermark_base, gen->get_option("--watermark-base"));
    take(cfg, "segment-min", opts.segment_min, gen->get_option("--segment-min"));
    take(cfg, "segment-max", opts.segment_max, gen->get_option("--segment-max"));
    take(cfg, "seed", opts.seed, gen->get_option("--seed"));
    take(cfg, "source", opts.source.kind, gen->get_option("--source"));
    take(cfg, "zipf-exponent", opts.source.zipf_exponent, gen->get_option("--zipf-exponent"));
    take(cfg, "corpus", opts.source.corpus_path, gen->get_option("--corpus"));
    take(cfg, "ngram-order", opts.source.ngram_order, gen->get_option("--ngram-order"));
    take(cfg, "smoothing", opts.source.smoothing, gen->get_option("--smoothing"));
    take(cfg, "keys", opts.keys_path, gen->get_option("--keys"));
    take(cfg, "emit-logs", opts.emit_logs, gen->get_option("--emit-logs"));
    take(cfg, "workers", opts.workers, gen->get_option("--workers"));
    take(cfg, "out", out_dir, gen->get_option("--out"));
    opts.out_dir = out_dir.empty() ? default_out_root() / "dataset" : fs::path(out_dir);
    cmd_generate(opts);
    std::cout << "generated " << opts.n_traces << " traces in " << opts.out_dir.string() << "\n";
    return 0;
  }

  // trace ----------------------------------------------------------------
  auto* trace = app.get_subcommand("trace");
  if (trace->parsed()) {
    TraceOptions opts;
    std::string config_path = trace->get_option("--config")->as<std::string>();
    const json cfg = load_config_or_empty(config_path);
    std::vector<std::string> inputs = trace->get_option("files")->as<std::vector<std::string>>();
    std::string out_dir;
    take(cfg, "keys", opts.keys_path, trace->get_option("--keys"));
    take(cfg, "window", opts.detector.window_tokens, trace->get_option("--window"));
    take(cfg, "step", opts.detector.step_tokens, trace->get_option("--step"));
    take(cfg, "smooth-win", opts.detector.smooth_win, trace->get_option("--smooth-win"));
    take(cfg, "local-radius", opts.detector.boundary.local_radius,
         trace->get_option("--local-radius"));
    take(cfg, "min-points-for-pair", opts.detector.boundary.min_points_for_pair,
         trace->get_option("--min-points-for-pair"));
    take(cfg, "tau-c", opts.detector.boundary.tau_c, trace->get_option("--tau-c"));
    take(cfg, "confidence-h", opts.detector.confidence_h, trace->get_option("--confidence-h"));
    take(cfg, "dump-scores", opts.dump_scores, trace->get_option("--dump-scores"));
    take(cfg, "workers", opts.workers, trace->get_option("--workers"));
    take(cfg, "out", out_dir, trace->get_option("--out"));
    opts.inputs = to_paths(inputs);
    opts.out_dir = out_dir.empty() ? default_out_root() / "detection" : fs::path(out_dir);
    cmd_trace(opts);
    std::cout << "traced " << opts.inputs.size() << " files into " << opts.out_dir.string()
              << "\n";
    return 0;
  }

  // corrupt ----------------------------------------------------------------
  auto* corrupt = app.get_subcommand("corrupt");
  if (corrupt->parsed()) {
    CorruptOptions opts;
    std::string config_path = corrupt->get_option("--config")->as<std::string>();
    const json cfg = load_config_or_empty(config_path);
    std::vector<std::string> inputs =
        corrupt->get_option("files")->as<std::vector<std::string>>();
    std::string out_dir;
    take(cfg, "mode", opts.mode, corrupt->get_option("--mode"));
    take(cfg, "seed", opts.seed, corrupt->get_option("--seed"));
    take(cfg, "pii-rate", opts.pii_rate, corrupt->get_option("--pii-rate"));
    take(cfg, "pii-placeholder", opts.pii_placeholder, corrupt->get_option("--pii-placeholder"));
    take(cfg, "workers", opts.workers, corrupt->get_option("--workers"));
    take(cfg, "out", out_dir, corrupt->get_option("--out"));
    opts.inputs = to_paths(inputs);
    opts.out_dir = out_dir.empty() ? default_out_root() / "corrupted" : fs::path(out_dir);
    cmd_corrupt(opts);
    std::cout << "corrupted " << opts.inputs.size() << " logs into " << opts.out_dir.string()
              << "\n";
    return 0;
  }

  // restore ----------------------------------------------------------------
  auto* restore_cmd = app.get_subcommand("restore");
  if (restore_cmd->parsed()) {
    RestoreOptions opts;
    std::string config_path = restore_cmd->get_option("--config")->as<std::string>();
    const json cfg = load_config_or_empty(config_path);
    std::vector<std::string> inputs =
        restore_cmd->get_option("files")->as<std::vector<std::string>>();
    std::string out_dir;
    take(cfg, "keys", opts.keys_path, restore_cmd->get_option("--keys"));
    take(cfg, "window", opts.detector.window_tokens, restore_cmd->get_option("--window"));
    take(cfg, "step", opts.detector.step_tokens, restore_cmd->get_option("--step"));
    take(cfg, "tau-c", opts.detector.boundary.tau_c, restore_cmd->get_option("--tau-c"));
    take(cfg, "workers", opts.workers, restore_cmd->get_option("--workers"));
    take(cfg, "out", out_dir, restore_cmd->get_option("--out"));
    opts.inputs = to_paths(inputs);
    opts.out_dir = out_dir.empty() ? default_out_root() / "restored" : fs::path(out_dir);
    cmd_restore(opts);
    std::cout << "restored " << opts.inputs.size() << " logs into " << opts.out_dir.string()
              << "\n";
    return 0;
  }

  // eval ----------------------------------------------------------------
  auto* eval_cmd = app.get_subcommand("eval");
  if (eval_cmd->parsed()) {
    EvalOptions opts;
    std::string out_dir = eval_cmd->get_option("--out")->as<std::string>();
    opts.pred = to_paths(eval_cmd->get_option("--pred")->as<std::vector<std::string>>());
    opts.truth = to_paths(eval_cmd->get_option("--truth")->as<std::vector<std::string>>());
    opts.graphs = to_paths(eval_cmd->get_option("--graphs")->as<std::vector<std::string>>());
    opts.out_dir = out_dir.empty() ? default_out_root() / "eval" : fs::path(out_dir);
    const auto outputs = cmd_eval(opts);
    std::cout << "report written to " << outputs.front().string() << "\n";
    return 0;
  }

  // baseline ----------------------------------------------------------------
  auto* baseline = app.get_subcommand("baseline");
  if (baseline->parsed()) {
    BaselineOptions opts;
    std::string config_path = baseline->get_option("--config")->as<std::string>();
    const json cfg = load_config_or_empty(config_path);
    std::vector<std::string> inputs =
        baseline->get_option("files")->as<std::vector<std::string>>();
    std::string out_dir;
    take(cfg, "method", opts.method, baseline->get_option("--method"));
    take(cfg, "window", opts.window_tokens, baseline->get_option("--window"));
    take(cfg, "step", opts.step_tokens, baseline->get_option("--step"));
    take(cfg, "stickiness", opts.stickiness, baseline->get_option("--stickiness"));
    take(cfg, "seed", opts.seed, baseline->get_option("--seed"));
    take(cfg, "workers", opts.workers, baseline->get_option("--workers"));
    take(cfg, "out", out_dir, baseline->get_option("--out"));
    opts.inputs = to_paths(inputs);
    opts.out_dir = out_dir.empty() ? default_out_root() / "baseline" : fs::path(out_dir);
    cmd_baseline(opts);
    std::cout << "baseline " << opts.method << " wrote " << opts.inputs.size()
              << " records into " << opts.out_dir.string() << "\n";
    return 0;
  }

  std::cerr << app.help() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyed watermark tracing for multi-agent token logs"};
  app.require_subcommand(0, 1);

  const auto add_common = [](CLI::App* cmd, bool with_files) {
    cmd->add_option("--config", "JSON config; keys mirror the long flag names");
    cmd->add_option("--out", "output directory (default: $AGENTTRACE_OUT or ./out)");
    cmd->add_option("--workers", "worker threads for independent files")
        ->check(CLI::PositiveNumber);
    if (with_files) {
      cmd->add_option("files", "input files")->expected(-1);
    }
  };

  auto* gen = app.add_subcommand("generate", "synthesize watermarked trace datasets");
  add_common(gen, false);
  gen->add_option("--topology", "chain | star_pure | tree | ring | complete");
  gen->add_option("--agents", "agent count")->check(CLI::Range(2, 62));
  gen->add_option("--rounds", "protocol rounds");
  gen->add_option("--n-traces", "traces to generate");
  gen->add_option("--vocab", "vocabulary size");
  gen->add_option("--kappa", "perturbation magnitude");
  gen->add_option("--n-gram", "context length for the keyed permutation");
  gen->add_option("--watermark-base", "first watermark id");
  gen->add_option("--segment-min", "minimum segment length in tokens");
  gen->add_option("--segment-max", "maximum segment length in tokens");
  gen->add_option("--seed", "base seed");
  gen->add_option("--source", "uniform | zipfian | ngram");
  gen->add_option("--zipf-exponent", "zipfian exponent");
  gen->add_option("--corpus", "token-id corpus for the ngram source");
  gen->add_option("--ngram-order", "ngram source order");
  gen->add_option("--smoothing", "add-k smoothing for the ngram source");
  gen->add_option("--keys", "existing key manifest to use");
  gen->add_flag("--emit-logs", "also write structured logs per trace");

  auto* trace = app.add_subcommand("trace", "recover attribution and transition graphs");
  add_common(trace, true);
  trace->add_option("--keys", "key manifest path")->required();
  trace->add_option("--window", "window width in tokens");
  trace->add_option("--step", "window step in tokens");
  trace->add_option("--smooth-win", "margin smoothing width (odd)");
  trace->add_option("--local-radius", "boundary refinement radius in windows");
  trace->add_option("--min-points-for-pair", "minimum windows per side of a split");
  trace->add_option("--tau-c", "threshold coefficient of the detection rule");
  trace->add_option("--confidence-h", "stable windows per side for confidences");
  trace->add_flag("--dump-scores", "write score-field CSVs");

  auto* corrupt = app.add_subcommand("corrupt", "apply log obfuscations");
  add_common(corrupt, true);
  corrupt->add_option("--mode", "remove-id | boundary | pii");
  corrupt->add_option("--seed", "corruption seed");
  corrupt->add_option("--pii-rate", "fraction of tokens to redact in pii mode");
  corrupt->add_option("--pii-placeholder", "placeholder token id in pii mode");

  auto* restore_cmd = app.add_subcommand("restore", "reconstruct corrupted logs from watermarks");
  add_common(restore_cmd, true);
  restore_cmd->add_option("--keys", "key manifest path")->required();
  restore_cmd->add_option("--window", "window width in tokens");
  restore_cmd->add_option("--step", "window step in tokens");
  restore_cmd->add_option("--tau-c", "threshold coefficient of the detection rule");

  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--pred", "prediction files (attribution records or restored logs)")
      ->expected(-1)
      ->required();
  eval_cmd->add_option("--truth", "ground-truth files (traces or original logs)")
      ->expected(-1)
      ->required();
  eval_cmd->add_option("--graphs", "graph reports aligned with --pred")->expected(-1);
  eval_cmd->add_option("--out", "output directory");

  auto* baseline = app.add_subcommand("baseline", "run non-watermark comparison methods");
  add_common(baseline, true);
  baseline->add_option("--method", "viterbi | oracle | random | recursive");
  baseline->add_option("--window", "window width in tokens");
  baseline->add_option("--step", "window step in tokens");
  baseline->add_option("--stickiness", "self-transition prior for viterbi");
  baseline->add_option("--seed", "seed for the random method");

  try {
    app.parse(argc, argv);
    return dispatch(app);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const agenttrace::format_error& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 4;
  } catch (const agenttrace::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const agenttrace::unrestorable_error& e) {
    std::cerr << "unrestorable: " << e.what() << "\n";
    return 5;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "undefined result: " << e.what() << "\n";
    return 2;
  } catch (const std::overflow_error& e) {
    std::cerr << "overflow: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
