#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "bplp/benchmark.hpp"
#include "bplp/error.hpp"
#include "bplp/eval.hpp"
#include "test_support.hpp"

using namespace bplp;
using namespace testing_support;

namespace {

/// Fraction of (positive, negative) pairs ordered correctly, ties count half.
double pairwise_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        total += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return wins / total;
}

/// Sum over distinct thresholds of (recall step) * precision at that threshold.
double threshold_sweep_aupr(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> thresholds(s);
  std::sort(thresholds.rbegin(), thresholds.rend());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double positives = static_cast<double>(std::count(y.begin(), y.end(), 1));
  double area = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0, flagged = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) flagged += 1, tp += y[i];
    const double recall = tp / positives;
    area += (recall - prev_recall) * tp / flagged;
    prev_recall = recall;
  }
  return area;
}

/// Small tsv graph where every left node has degree >= 10.
std::filesystem::path write_toy_dataset(const std::filesystem::path& dir) {
  std::mt19937_64 rng(81);
  std::bernoulli_distribution coin(0.35);
  std::ofstream out(dir / "toy.tsv");
  for (int u = 0; u < 30; ++u) {
    int k = 0;
    for (int v = 0; v < 40; ++v)
      if (coin(rng) || v < 10 - k) {
        out << 'u' << u << '\t' << 'v' << v << '\n';
        ++k;
      }
  }
  return dir / "toy.tsv";
}

RunConfig toy_config(const std::filesystem::path& dir, std::vector<std::string> methods,
                     std::vector<std::uint64_t> seeds) {
  const auto data = write_toy_dataset(dir);
  nlohmann::json j = {{"name", "toy"},
                      {"datasets", {{{"name", "toy"}, {"path", data.filename().string()}}}},
                      {"split", {{"test_fraction", 0.2}, {"seeds", seeds}}},
                      {"methods", methods},
                      {"output_dir", "out"},
                      {"record_runtime", false}};
  return run_config_from_json(j, dir);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Auroc, WorkedExamples) {
  EXPECT_DOUBLE_EQ(auroc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 0, 1, 0}), 0.75);
  EXPECT_DOUBLE_EQ(auroc(std::vector<double>{1, 1, 1, 1}, std::vector<int>{1, 0, 1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(auroc(std::vector<double>{3, 2, 1}, std::vector<int>{1, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(auroc(std::vector<double>{1, 2, 3}, std::vector<int>{1, 1, 0}), 0.0);
}

TEST(Aupr, WorkedExamples) {
  // ranks 1 and 3 positive: precision 1 at recall 1/2, 2/3 at recall 1
  EXPECT_DOUBLE_EQ(aupr(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 0, 1, 0}),
                   0.5 * 1.0 + 0.5 * (2.0 / 3.0));
  // one tie block: precision equals prevalence
  EXPECT_DOUBLE_EQ(aupr(std::vector<double>{5, 5, 5, 5}, std::vector<int>{1, 0, 0, 0}), 0.25);
  EXPECT_DOUBLE_EQ(aupr(std::vector<double>{2, 1}, std::vector<int>{1, 1}), 1.0);
}

TEST(Metrics, MatchQuadraticOraclesOnRandomInstances) {
  std::mt19937_64 rng(82);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial;
    std::uniform_int_distribution<int> level(0, trial % 2 ? 5 : 1000000);  // odd trials are tie-heavy
    std::bernoulli_distribution coin(0.3);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = level(rng), y[i] = coin(rng);
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auroc(s, y), pairwise_auroc(s, y), 1e-12) << trial;
    EXPECT_NEAR(aupr(s, y), threshold_sweep_aupr(s, y), 1e-12) << trial;
  }
}

TEST(Metrics, InvariantUnderMonotoneTransformAndPermutation) {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<double> s(200), t(200);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < 200; ++i) s[i] = std::round(u(rng) * 4) / 4, y[i] = i % 3 == 0;
  for (std::size_t i = 0; i < 200; ++i) t[i] = std::exp(2 * s[i]) + 1;
  EXPECT_DOUBLE_EQ(auroc(s, y), auroc(t, y));
  EXPECT_DOUBLE_EQ(aupr(s, y), aupr(t, y));
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> ps(200);
  std::vector<int> py(200);
  for (std::size_t i = 0; i < 200; ++i) ps[i] = s[perm[i]], py[i] = y[perm[i]];
  EXPECT_NEAR(auroc(s, y), auroc(ps, py), 1e-15);
  EXPECT_NEAR(aupr(s, y), aupr(ps, py), 1e-15);
}

TEST(Metrics, RejectMalformedInputs) {
  const std::vector<double> s = {1, 2, 3};
  EXPECT_THROW(auroc(s, std::vector<int>{1, 0}), MetricError);
  EXPECT_THROW(auroc(s, std::vector<int>{1, 1, 1}), MetricError);
  EXPECT_THROW(aupr(s, std::vector<int>{0, 0, 0}), MetricError);
  EXPECT_THROW(aupr(s, std::vector<int>{0, 2, 1}), MetricError);
  EXPECT_THROW(auroc(std::vector<double>{1, std::nan(""), 0}, std::vector<int>{1, 0, 0}), MetricError);
}

TEST(Evaluate, OracleAndConstantScorers) {
  std::mt19937_64 rng(84);
  auto g = random_graph(rng, 25, 30, 0.4);
  g = min_degree_filter(g, 10);
  const auto split = split_per_left_node(g, 0.2, 3);
  std::vector<Pair> test(split.test_edges);
  std::sort(test.begin(), test.end());

  const Scorer oracle = [&](const BipartiteGraph&, std::span<const Pair> c) {
    ScoreTable t;
    t.pairs.assign(c.begin(), c.end());
    for (const auto& p : c) t.scores.push_back(std::binary_search(test.begin(), test.end(), p) ? 1.0 : 0.0);
    return t;
  };
  const auto best = evaluate_method(g, split, oracle, {"oracle", "rand", "d"});
  EXPECT_DOUBLE_EQ(best.aupr, 1.0);
  EXPECT_DOUBLE_EQ(best.auroc, 1.0);
  EXPECT_EQ(best.n_positives, split.test_edges.size());
  EXPECT_EQ(best.n_candidates, g.left_count() * g.right_count() - split.train_edges.size());
  EXPECT_EQ(best.seed, 3u);

  const Scorer flat = [](const BipartiteGraph&, std::span<const Pair> c) {
    ScoreTable t;
    t.pairs.assign(c.begin(), c.end());
    t.scores.assign(c.size(), 0.0);
    return t;
  };
  const auto none = evaluate_method(g, split, flat, {"flat", "rand", "d"});
  EXPECT_DOUBLE_EQ(none.auroc, 0.5);
  EXPECT_DOUBLE_EQ(none.aupr, static_cast<double>(none.n_positives) / static_cast<double>(none.n_candidates));

  const Scorer short_list = [](const BipartiteGraph&, std::span<const Pair> c) {
    ScoreTable t;
    t.pairs.assign(c.begin(), c.end() - 1);
    t.scores.assign(c.size() - 1, 0.0);
    return t;
  };
  EXPECT_THROW(evaluate_method(g, split, short_list, {"bad", "rand", "d"}), SchemaError);
}

TEST(Evaluate, ScorerNeverSeesTestEdges) {
  std::mt19937_64 rng(85);
  const auto g = min_degree_filter(random_graph(rng, 20, 20, 0.5), 10);
  const auto split = split_per_left_node(g, 0.2, 4);
  const Scorer spy = [&](const BipartiteGraph& train, std::span<const Pair> c) {
    for (const auto& e : split.test_edges) EXPECT_FALSE(train.has_edge(e.left, e.right));
    EXPECT_EQ(train.edge_count(), split.train_edges.size());
    ScoreTable t;
    t.pairs.assign(c.begin(), c.end());
    t.scores.assign(c.size(), 1.0);
    return t;
  };
  evaluate_method(g, split, spy, {"spy", "rand", "d"});
}

TEST(EvalReport, JsonRoundTrip) {
  EvalReport r{"katz", "ml", 5, 0.125, 0.75, 1.5, 10, 200, "00000000deadbeef"};
  const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(to_json(back), to_json(r));
}

TEST(Benchmark, CellCountsAndAggregatedRows) {
  const auto dir = scratch_dir("bench-cells");
  const auto cfg = toy_config(dir, {"l3", "pa"}, {1, 2, 3});
  const auto result = benchmark_run(cfg);
  ASSERT_EQ(result.cells.size(), 6u);
  EXPECT_FALSE(result.any_failed());
  const auto fingerprint = load_dataset(cfg.datasets[0]).fingerprint();
  for (const auto& c : result.cells) {
    const auto& m = c.report.method_name;
    EXPECT_EQ(c.report.config_digest,
              cell_digest(cfg.digest(), "toy", fingerprint, m, method_params(m, cfg.settings), c.report.seed));
    EXPECT_GE(c.report.auroc, 0.0);
    EXPECT_LE(c.report.auroc, 1.0);
    const auto cell = cfg.output_dir / "cells" / "toy" / c.report.method_name /
                      ("seed-" + std::to_string(c.report.seed));
    EXPECT_TRUE(std::filesystem::exists(cell / "report.json"));
    EXPECT_TRUE(std::filesystem::exists(cell / "scores.tsv"));
  }
  const auto md = slurp(cfg.output_dir / "results.md");
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n') >= 4, true);
  EXPECT_NE(md.find("| toy"), std::string::npos);
  std::size_t rows = 0;
  for (std::size_t pos = 0; (pos = md.find("| toy", pos)) != std::string::npos; ++pos) ++rows;
  EXPECT_EQ(rows, 2u);
  const auto csv = slurp(cfg.output_dir / "results.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_TRUE(std::filesystem::exists(cfg.output_dir / "timings.csv"));
  EXPECT_NE(slurp(cfg.output_dir / "status.json").find("completed"), std::string::npos);
}

TEST(Benchmark, CsvIsByteStableAndParses) {
  const auto dir = scratch_dir("bench-stable");
  auto cfg = toy_config(dir, {"l3", "dist"}, {7, 8});
  benchmark_run(cfg);
  const auto first = slurp(cfg.output_dir / "results.csv");
  cfg.output_dir = dir / "again";
  const auto second_run = benchmark_run(cfg);
  EXPECT_EQ(slurp(cfg.output_dir / "results.csv"), first);
  EXPECT_EQ(first.find("NA") != std::string::npos, true);

  const auto parsed = parse_csv(first);
  ASSERT_EQ(parsed.size(), second_run.cells.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].report.method_name, second_run.cells[i].report.method_name);
    EXPECT_EQ(parsed[i].report.seed, second_run.cells[i].report.seed);
    EXPECT_NEAR(parsed[i].report.aupr, second_run.cells[i].report.aupr, 1e-10);
  }
  EXPECT_EQ(render_csv(parsed, false), first);
}

TEST(Benchmark, FailingCellIsRecordedAndRunContinues) {
  const auto dir = scratch_dir("bench-fail");
  auto cfg = toy_config(dir, {"spm", "pa"}, {1});
  cfg.settings.spm.node_cap = 10;
  const auto result = benchmark_run(cfg);
  ASSERT_EQ(result.cells.size(), 2u);
  EXPECT_TRUE(result.any_failed());
  EXPECT_FALSE(result.cells[0].ok);
  EXPECT_TRUE(result.cells[1].ok);
  EXPECT_TRUE(std::filesystem::exists(cfg.output_dir / "cells" / "toy" / "spm" / "seed-1" / "error.txt"));
  EXPECT_NE(slurp(cfg.output_dir / "results.csv").find("FAILED"), std::string::npos);
}

TEST(RunConfig, RejectsUnknownKeysMethodsAndMissingFiles) {
  const auto dir = scratch_dir("bench-config");
  write_toy_dataset(dir);
  nlohmann::json j = {{"datasets", {{{"name", "toy"}, {"path", "toy.tsv"}}}},
                      {"split", {{"seeds", {1}}}},
                      {"methods", {"l3"}},
                      {"output_dir", "out"}};
  EXPECT_NO_THROW(run_config_from_json(j, dir));
  auto bad = j;
  bad["colour"] = 1;
  EXPECT_THROW(run_config_from_json(bad, dir), ArgumentError);
  bad = j;
  bad["methods"] = {"l4"};
  EXPECT_THROW(run_config_from_json(bad, dir), ArgumentError);
  bad = j;
  bad["datasets"][0]["path"] = "missing.tsv";
  EXPECT_THROW(run_config_from_json(bad, dir), ArgumentError);
  bad = j;
  bad["params"] = {{"katz", {{"beta", 1}}}};
  EXPECT_THROW(run_config_from_json(bad, dir), ArgumentError);

  // the digest ignores where things live
  auto a = run_config_from_json(j, dir);
  auto b = a;
  b.output_dir = "/elsewhere";
  EXPECT_EQ(a.digest(), b.digest());
  b.seeds = {2};
  EXPECT_NE(a.digest(), b.digest());
}
