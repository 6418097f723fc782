#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bplp/eval.hpp"
#include "bplp/graph.hpp"
#include "bplp/methods.hpp"

namespace bplp {

struct DatasetSpec {
  std::string name;
  std::filesystem::path path;  // resolved against the config file's directory
  EdgeFormat format = EdgeFormat::tsv_pair;
  std::size_t min_left_degree = 0;
};

/// One self-describing benchmark run.
struct RunConfig {
  std::string name;
  std::vector<DatasetSpec> datasets;
  double test_fraction = 0.1;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  MethodSettings settings;
  std::filesystem::path output_dir;
  bool record_runtime = true;  // false writes NA so results.csv is byte-stable
  bool persist_scores = true;

  /// 16 hex digits of FNV-1a over the canonical JSON form.
  std::string digest() const;
};

/// Paths inside `j` are taken relative to `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical form; paths are written as given after resolution.
nlohmann::json to_json(const RunConfig& config);

/// Loads a dataset and applies its filter.
BipartiteGraph load_dataset(const DatasetSpec& spec);

std::string hex_digest(std::uint64_t value);

/// Digest of everything that determines one cell's output.
std::string cell_digest(const std::string& config_digest, const std::string& dataset,
                        std::uint64_t graph_fingerprint, const std::string& method,
                        const nlohmann::json& params, std::uint64_t seed);

struct CellResult {
  EvalReport report;  // method, dataset and seed are always set
  bool ok = true;
  std::string error;
};

struct BenchmarkResult {
  std::vector<CellResult> cells;  // ordered by (dataset, method, seed) in config order
  bool any_failed() const;
};

/// Runs every (dataset, method, seed) cell and writes results.csv,
/// results.md, timings.csv, run.json and per-cell artifacts under the
/// output directory. A failing cell is recorded and the run continues.
BenchmarkResult benchmark_run(const RunConfig& config);

std::string render_csv(const std::vector<CellResult>& cells, bool record_runtime);
std::vector<CellResult> parse_csv(const std::string& text);
/// Aligned table with mean and sample standard deviation over seeds.
std::string render_markdown(const std::vector<CellResult>& cells, const std::string& title);

}  // namespace bplp
