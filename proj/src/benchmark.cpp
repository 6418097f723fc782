#include "bplp/benchmark.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "bplp/error.hpp"
#include "bplp/hash.hpp"
#include "bplp/log.hpp"

namespace bplp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex_digest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ArgumentError("run config must be a JSON object");
  static const std::vector<std::string> allowed = {"name",    "datasets",      "split",
                                                   "methods", "params",        "output_dir",
                                                   "record_runtime", "persist_scores"};
  for (const auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ArgumentError("unknown config key '" + k + "'");

  RunConfig c;
  try {
    c.name = j.value("name", std::string("run"));
    for (const auto& d : j.at("datasets")) {
      DatasetSpec s;
      s.name = d.at("name");
      const fs::path p = d.at("path").get<std::string>();
      s.path = p.is_absolute() ? p : base_dir / p;
      s.format = parse_edge_format(d.value("format", std::string("tsv")));
      s.min_left_degree = d.value("min_left_degree", std::size_t{0});
      c.datasets.push_back(std::move(s));
    }
    const auto& split = j.at("split");
    c.test_fraction = split.value("test_fraction", 0.1);
    c.seeds = split.at("seeds").get<std::vector<std::uint64_t>>();
    c.methods = j.at("methods").get<std::vector<std::string>>();
    const fs::path out = j.at("output_dir").get<std::string>();
    c.output_dir = out.is_absolute() ? out : base_dir / out;
    c.record_runtime = j.value("record_runtime", true);
    c.persist_scores = j.value("persist_scores", true);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("run config: ") + e.what());
  }
  c.settings = settings_from_json(j.contains("params") ? j.at("params") : json());

  if (c.datasets.empty()) throw ArgumentError("run config lists no datasets");
  if (c.seeds.empty()) throw ArgumentError("run config lists no seeds");
  if (c.methods.empty()) throw ArgumentError("run config lists no methods");
  for (const auto& m : c.methods)
    if (!is_known_method(m)) throw ArgumentError("unknown method '" + m + "' in run config");
  for (const auto& d : c.datasets)
    if (!fs::exists(d.path))
      throw ArgumentError("dataset '" + d.name + "': file not found: " + d.path.string());
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("config '" + path.string() + "': " + e.what());
  }
  return run_config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

json to_json(const RunConfig& c) {
  json datasets = json::array();
  for (const auto& d : c.datasets)
    datasets.push_back({{"name", d.name},
                        {"path", d.path.lexically_normal().string()},
                        {"format", to_string(d.format)},
                        {"min_left_degree", d.min_left_degree}});
  return {{"name", c.name},
          {"datasets", datasets},
          {"split", {{"test_fraction", c.test_fraction}, {"seeds", c.seeds}}},
          {"methods", c.methods},
          {"params", to_json(c.settings)},
          {"output_dir", c.output_dir.lexically_normal().string()},
          {"record_runtime", c.record_runtime},
          {"persist_scores", c.persist_scores}};
}

std::string RunConfig::digest() const {
  // output location and file paths do not change results; leave them out
  json j = to_json(*this);
  j.erase("output_dir");
  for (auto& d : j.at("datasets")) d.erase("path");
  return hex_digest(fnv1a(j.dump()));
}

BipartiteGraph load_dataset(const DatasetSpec& spec) {
  auto g = load_edge_list(spec.path, spec.format);
  if (spec.min_left_degree > 0) g = min_degree_filter(g, spec.min_left_degree);
  return g;
}

std::string cell_digest(const std::string& config_digest, const std::string& dataset,
                        std::uint64_t graph_fingerprint, const std::string& method,
                        const json& params, std::uint64_t seed) {
  Fnv1a h;
  h.add(std::string_view(config_digest));
  h.add(std::string_view(dataset));
  h.add(graph_fingerprint);
  h.add(std::string_view(method));
  h.add(std::string_view(params.dump()));
  h.add(seed);
  return hex_digest(h.digest());
}

bool BenchmarkResult::any_failed() const {
  for (const auto& c : cells)
    if (!c.ok) return true;
  return false;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void write_status(const fs::path& dir, const std::string& state, const std::string& digest,
                  std::size_t done, std::size_t total) {
  write_text(dir / "status.json",
             json{{"state", state}, {"config_digest", digest}, {"cells_done", done}, {"cells_total", total}}
                     .dump(2) +
                 "\n");
}

}  // namespace

std::string render_csv(const std::vector<CellResult>& cells, bool record_runtime) {
  std::string out = "dataset,method,seed,aupr,auroc,runtime_seconds,n_candidates,config_digest\n";
  for (const auto& c : cells) {
    const auto& r = c.report;
    out += r.dataset_name + "," + r.method_name + "," + std::to_string(r.seed) + ",";
    if (c.ok) {
      out += fmt("%.10f", r.aupr) + "," + fmt("%.10f", r.auroc) + ",";
      out += (record_runtime ? fmt("%.3f", r.runtime_seconds) : std::string("NA")) + ",";
      out += std::to_string(r.n_candidates);
    } else {
      out += "FAILED,FAILED,NA,NA";
    }
    out += "," + r.config_digest + "\n";
  }
  return out;
}

std::vector<CellResult> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<CellResult> cells;
  if (!std::getline(in, line) || line.rfind("dataset,method,seed", 0) != 0)
    throw ParseError("results CSV: missing header", 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 8) throw ParseError("results CSV: expected 8 fields", line_no);
    CellResult c;
    auto& r = c.report;
    try {
      r.dataset_name = f[0];
      r.method_name = f[1];
      r.seed = std::stoull(f[2]);
      r.config_digest = f[7];
      if (f[3] == "FAILED") {
        c.ok = false;
      } else {
        r.aupr = std::stod(f[3]);
        r.auroc = std::stod(f[4]);
        r.runtime_seconds = f[5] == "NA" ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[5]);
        r.n_candidates = std::stoull(f[6]);
      }
    } catch (const std::logic_error&) {
      throw ParseError("results CSV: bad number", line_no);
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

std::string render_markdown(const std::vector<CellResult>& cells, const std::string& title) {
  struct Acc {
    std::vector<double> aupr, auroc, runtime;
    std::size_t failed = 0;
  };
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& c : cells) {
    const auto key = std::make_pair(c.report.dataset_name, c.report.method_name);
    if (!acc.count(key)) keys.push_back(key);
    auto& a = acc[key];
    if (!c.ok) {
      ++a.failed;
      continue;
    }
    a.aupr.push_back(c.report.aupr);
    a.auroc.push_back(c.report.auroc);
    if (!std::isnan(c.report.runtime_seconds)) a.runtime.push_back(c.report.runtime_seconds);
  }
  auto summary = [](const std::vector<double>& v, const char* spec) -> std::string {
    if (v.empty()) return "NA";
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return fmt(spec, mean) + " ± " + fmt(spec, sd);
  };

  std::vector<std::vector<std::string>> rows = {
      {"Dataset", "Method", "AUPR", "AUROC", "Runtime (s)", "Seeds", "Failed"}};
  for (const auto& key : keys) {
    const auto& a = acc[key];
    rows.push_back({key.first, key.second, summary(a.aupr, "%.4f"), summary(a.auroc, "%.4f"),
                    summary(a.runtime, "%.2f"), std::to_string(a.aupr.size()), std::to_string(a.failed)});
  }
  // column widths in code points so the ± sign does not skew alignment
  auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
    return n;
  };
  std::vector<std::size_t> w(rows[0].size(), 3);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], width(r[i]));
  auto line = [&](const std::vector<std::string>& r) {
    std::string s = "|";
    for (std::size_t i = 0; i < r.size(); ++i) s += " " + r[i] + std::string(w[i] - width(r[i]), ' ') + " |";
    return s + "\n";
  };
  std::string out = "## " + title + "\n\n" + line(rows[0]) + "|";
  for (auto x : w) out += std::string(x + 2, '-') + "|";
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) out += line(rows[i]);
  return out;
}

BenchmarkResult benchmark_run(const RunConfig& config) {
  const auto digest = config.digest();
  fs::create_directories(config.output_dir);
  write_text(config.output_dir / "run.json", to_json(config).dump(2) + "\n");
  const std::size_t total = config.datasets.size() * config.methods.size() * config.seeds.size();
  write_status(config.output_dir, "running", digest, 0, total);

  BenchmarkResult result;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, CellResult> ordered;
  std::size_t done = 0;
  for (std::size_t di = 0; di < config.datasets.size(); ++di) {
    const auto& ds = config.datasets[di];
    BipartiteGraph graph;
    std::string load_error;
    try {
      graph = load_dataset(ds);
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
      const auto seed = config.seeds[si];
      EdgeSplit split;
      std::string split_error = load_error;
      if (split_error.empty()) {
        try {
          split = split_per_left_node(graph, config.test_fraction, seed);
        } catch (const std::exception& e) {
          split_error = e.what();
        }
      }
      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const auto& method = config.methods[mi];
        CellResult cell;
        cell.report.dataset_name = ds.name;
        cell.report.method_name = method;
        cell.report.seed = seed;
        cell.report.config_digest =
            cell_digest(digest, ds.name, graph.fingerprint(), method,
                        method_params(method, config.settings), seed);
        const auto cell_dir =
            config.output_dir / "cells" / ds.name / method / ("seed-" + std::to_string(seed));
        try {
          if (!split_error.empty()) throw Error(split_error);
          ScoreTable scores;
          cell.report = evaluate_method(graph, split, make_scorer(method, config.settings, seed),
                                        {method, ds.name, cell.report.config_digest}, &scores);
          fs::create_directories(cell_dir);
          if (config.persist_scores) write_score_table(scores, graph, cell_dir / "scores.tsv");
          write_text(cell_dir / "report.json", to_json(cell.report).dump(2) + "\n");
          log(LogLevel::info, ds.name + " " + method + " seed " + std::to_string(seed) + ": aupr " +
                                  fmt("%.4f", cell.report.aupr) + " auroc " +
                                  fmt("%.4f", cell.report.auroc) + " (" +
                                  fmt("%.2f", cell.report.runtime_seconds) + " s)");
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
          log(LogLevel::error, ds.name + " " + method + " seed " + std::to_string(seed) +
                                   " failed: " + cell.error);
          fs::create_directories(cell_dir);
          write_text(cell_dir / "error.txt", cell.error + "\n");
        }
        ordered[{di, mi, si}] = std::move(cell);
        write_status(config.output_dir, "running", digest, ++done, total);
      }
    }
  }
  for (auto& [k, c] : ordered) result.cells.push_back(std::move(c));

  write_text(config.output_dir / "results.csv", render_csv(result.cells, config.record_runtime));
  write_text(config.output_dir / "timings.csv", render_csv(result.cells, true));
  write_text(config.output_dir / "results.md",
             render_markdown(result.cells, config.name + " (config " + digest + ")"));
  write_status(config.output_dir, result.any_failed() ? "completed_with_failures" : "completed", digest,
               done, total);
  return result;
}

}  // namespace bplp
