#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "bplp/benchmark.hpp"
#include "bplp/error.hpp"
#include "bplp/hash.hpp"
#include "bplp/log.hpp"
#include "bplp/parallel.hpp"

namespace fs = std::filesystem;
using namespace bplp;

namespace {

constexpr int kOk = 0;
constexpr int kMethodFailure = 1;
constexpr int kUsageError = 2;

/// Failure while preparing inputs (reading, parsing, splitting).
struct InputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphArgs {
  std::string path;
  std::string format = "tsv_pair";
  std::size_t min_left_degree = 0;

  void add(CLI::App* cmd, bool positional) {
    if (positional)
      cmd->add_option("file", path, "Edge-list file")->required();
    else
      cmd->add_option("--dataset", path, "Edge-list file")->required();
    cmd->add_option("--format", format, "tsv_pair or movielens_u_data")->capture_default_str();
    cmd->add_option("--min-left-degree", min_left_degree, "Drop left nodes below this degree")
        ->capture_default_str();
  }

  BipartiteGraph load() const {
    if (!fs::exists(path)) throw InputFailure("file not found: " + path);
    try {
      return load_dataset({fs::path(path).stem().string(), path, parse_edge_format(format), min_left_degree});
    } catch (const std::exception& e) {
      throw InputFailure(e.what());
    }
  }
};

void print_stats(const BipartiteGraph& g) {
  std::printf("left %zu  right %zu  nodes %zu  edges %zu  density %.6f  <k> %.4f  <k>_left %.4f\n",
              g.left_count(), g.right_count(), g.node_count(), g.edge_count(), density(g),
              mean_degree_all(g), mean_degree_left(g));
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputFailure("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFailure("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct RunOverrides {
  std::optional<double> alpha, epsilon, lr, perturbation;
  std::optional<int> layers, epochs, dim, repetitions, n_trees, max_depth;
  std::optional<std::size_t> batch_size, node_cap;

  void add(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Katz attenuation");
    cmd->add_option("--epsilon", epsilon, "LP attenuation");
    cmd->add_option("--layers", layers, "LightGCN layers");
    cmd->add_option("--epochs", epochs, "Training epochs (bpr, lightgcn)");
    cmd->add_option("--dim", dim, "Embedding size (bpr, lightgcn)");
    cmd->add_option("--lr", lr, "Learning rate (bpr, lightgcn, gbdt)");
    cmd->add_option("--batch-size", batch_size, "Mini-batch size (bpr, lightgcn)");
    cmd->add_option("--repetitions", repetitions, "SPM repetitions");
    cmd->add_option("--perturbation-fraction", perturbation, "SPM perturbation fraction");
    cmd->add_option("--node-cap", node_cap, "SPM node cap");
    cmd->add_option("--n-trees", n_trees, "GBDT rounds");
    cmd->add_option("--max-depth", max_depth, "GBDT depth");
  }

  void apply(const std::string& method, MethodSettings& s) const {
    if (alpha) s.katz.alpha = *alpha;
    if (epsilon) s.lp_epsilon = *epsilon;
    if (perturbation) s.spm.perturbation_fraction = *perturbation;
    if (repetitions) s.spm.repetitions = *repetitions;
    if (node_cap) s.spm.node_cap = *node_cap;
    if (n_trees) s.gbdt.n_trees = *n_trees;
    if (max_depth) s.gbdt.max_depth = *max_depth;
    for (TrainConfig* c : {&s.bpr, &s.lightgcn}) {
      if (epochs) c->epochs = *epochs;
      if (dim) c->dim = *dim;
      if (lr) c->learning_rate = *lr;
      if (batch_size) c->batch_size = *batch_size;
    }
    if (layers) s.lightgcn.layers = *layers;
    if (lr && method == "gbdt") s.gbdt.learning_rate = *lr;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link prediction on bipartite graphs"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load an edge list, filter it, print statistics");
  GraphArgs ingest_graph;
  std::string ingest_out;
  ingest_graph.add(ingest, true);
  ingest->add_option("--out", ingest_out, "Write the filtered graph as a TSV edge list");

  // split
  auto* split = app.add_subcommand("split", "Per-left-node train/test split");
  GraphArgs split_graph;
  double split_fraction = 0.1;
  std::uint64_t split_seed = 0;
  std::string split_out;
  split_graph.add(split, true);
  split->add_option("--test-fraction", split_fraction)->capture_default_str();
  split->add_option("--seed", split_seed)->required();
  split->add_option("--out", split_out, "Output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Split, score and evaluate one method");
  GraphArgs run_graph;
  std::string run_method, run_out, run_config, run_name;
  double run_fraction = 0.1;
  std::uint64_t run_seed = 0;
  RunOverrides overrides;
  run_graph.add(run, false);
  run->add_option("--method", run_method, "Scoring method")->required();
  run->add_option("--seed", run_seed, "Split and method seed")->required();
  run->add_option("--test-fraction", run_fraction)->capture_default_str();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--config", run_config, "Take method parameters from this run config");
  run->add_option("--name", run_name, "Dataset name in reports (default: file stem)");
  overrides.add(run);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run every cell of a run config");
  std::string bench_config, bench_out;
  bench->add_option("config", bench_config, "Run config (JSON)")->required();
  bench->add_option("--output-dir", bench_out, "Override the config's output directory");

  // report
  auto* report = app.add_subcommand("report", "Render the Markdown table of a finished benchmark");
  std::string report_dir;
  report->add_option("dir", report_dir, "Benchmark output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (log_level == "debug") set_log_level(LogLevel::debug);
    else if (log_level == "info") set_log_level(LogLevel::info);
    else if (log_level == "warn") set_log_level(LogLevel::warn);
    else if (log_level == "error") set_log_level(LogLevel::error);
    else if (log_level == "off") set_log_level(LogLevel::off);
    else throw InputFailure("unknown log level '" + log_level + "'");
    configure_workers_from_env();

    if (*ingest) {
      const auto g = ingest_graph.load();
      print_stats(g);
      if (!ingest_out.empty()) write_edge_list(g, ingest_out);
      return kOk;
    }

    if (*split) {
      const auto g = split_graph.load();
      EdgeSplit s;
      try {
        s = split_per_left_node(g, split_fraction, split_seed);
        write_split(g, s, split_out);
      } catch (const std::exception& e) {
        throw InputFailure(e.what());
      }
      std::printf("train %zu  test %zu  -> %s\n", s.train_edges.size(), s.test_edges.size(),
                  split_out.c_str());
      return kOk;
    }

    if (*run) {
      if (!is_known_method(run_method)) throw InputFailure("unknown method '" + run_method + "'");
      MethodSettings settings;
      if (!run_config.empty()) {
        try {
          settings = load_run_config(run_config).settings;
        } catch (const std::exception& e) {
          throw InputFailure(e.what());
        }
      }
      overrides.apply(run_method, settings);
      const auto g = run_graph.load();
      EdgeSplit s;
      try {
        s = split_per_left_node(g, run_fraction, run_seed);
      } catch (const std::exception& e) {
        throw InputFailure(e.what());
      }
      const std::string name = run_name.empty() ? fs::path(run_graph.path).stem().string() : run_name;
      const auto params = method_params(run_method, settings);
      const auto digest = cell_digest(hex_digest(fnv1a(params.dump())), name, g.fingerprint(),
                                      run_method, params, run_seed);
      ScoreTable scores;
      EvalReport r;
      try {
        r = evaluate_method(g, s, make_scorer(run_method, settings, run_seed),
                            {run_method, name, digest}, &scores);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "bplp: %s failed: %s\n", run_method.c_str(), e.what());
        return kMethodFailure;
      }
      fs::create_directories(run_out);
      write_score_table(scores, g, fs::path(run_out) / "scores.tsv");
      write_file(fs::path(run_out) / "report.json", to_json(r).dump(2) + "\n");
      std::printf("%s %s seed %llu: aupr %.4f auroc %.4f  candidates %zu  positives %zu  %.2f s\n",
                  name.c_str(), run_method.c_str(), static_cast<unsigned long long>(run_seed), r.aupr,
                  r.auroc, r.n_candidates, r.n_positives, r.runtime_seconds);
      return kOk;
    }

    if (*bench) {
      RunConfig cfg;
      try {
        cfg = load_run_config(bench_config);
      } catch (const std::exception& e) {
        throw InputFailure(e.what());
      }
      if (!bench_out.empty()) cfg.output_dir = bench_out;
      const auto result = benchmark_run(cfg);
      std::cout << read_file(cfg.output_dir / "results.md");
      return result.any_failed() ? kMethodFailure : kOk;
    }

    if (*report) {
      const auto cells = parse_csv(read_file(fs::path(report_dir) / "results.csv"));
      std::cout << render_markdown(cells, fs::path(report_dir).filename().string());
      return kOk;
    }
  } catch (const InputFailure& e) {
    std::fprintf(stderr, "bplp: %s\n", e.what());
    return kUsageError;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "bplp: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bplp: %s\n", e.what());
    return kMethodFailure;
  }
  return kOk;
}
