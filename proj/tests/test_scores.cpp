#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "bplp/error.hpp"
#include "bplp/reference.hpp"
#include "bplp/scores.hpp"
#include "test_support.hpp"

using namespace bplp;
using namespace testing_support;

namespace {

/// Sum over every walk of `length` steps from x to y of prod_{intermediate} w(node),
/// found by explicit depth-first enumeration.
double enumerate_walks(const std::vector<std::vector<std::size_t>>& adj, std::size_t x, std::size_t y,
                       int length, const std::function<double(std::size_t)>& weight) {
  double total = 0.0;
  std::function<void(std::size_t, int, double)> go = [&](std::size_t node, int steps, double w) {
    if (steps == length) {
      if (node == y) total += w;
      return;
    }
    for (auto next : adj[node]) {
      const bool last = steps + 1 == length;
      go(next, steps + 1, last ? w : w * weight(next));
    }
  };
  go(x, 0, 1.0);
  return total;
}

double inv_sqrt_degree(const std::vector<std::vector<std::size_t>>& adj, std::size_t node) {
  return 1.0 / std::sqrt(static_cast<double>(adj[node].size()));
}

Eigen::MatrixXd dense(const BipartiteGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    a(e.left, g.left_count() + e.right) = 1.0;
    a(g.left_count() + e.right, e.left) = 1.0;
  }
  return a;
}

}  // namespace

TEST(PathIndex, WorkedExample) {
  const auto g = example_graph();
  const std::vector<Pair> q = {{0, 2}};
  EXPECT_DOUBLE_EQ(score_path_index(g, q, 3).scores[0], 0.5);
}

TEST(PathIndex, NoPathScoresZero) {
  const auto g = BipartiteGraph::from_edges(2, 2, {{0, 0}, {1, 1}});
  const std::vector<Pair> q = {{0, 1}};
  EXPECT_EQ(score_path_index(g, q, 3).scores[0], 0.0);
}

TEST(PathIndex, EvenLengthRejected) {
  const auto g = example_graph();
  const std::vector<Pair> q = {{0, 2}};
  EXPECT_THROW(score_path_index(g, q, 4), ArgumentError);
  EXPECT_THROW(score_path_index(g, q, 0), ArgumentError);
}

TEST(PathIndex, MatchesWalkEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_small_graph(rng, 12);
    const auto adj = unified_adjacency(g);
    const auto pairs = all_pairs(g);
    for (int length : {3, 5, 7}) {
      const auto t = score_path_index(g, pairs, length);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double want =
            enumerate_walks(adj, pairs[i].left, g.left_count() + pairs[i].right, length,
                            [&](std::size_t n) { return inv_sqrt_degree(adj, n); });
        ASSERT_LE(relative_error(t.scores[i], want), 1e-12)
            << "trial " << trial << " L" << length << " pair " << i;
      }
    }
    // raw walk counts
    const auto raw = score_path_index(g, pairs, PathIndexParams{5, PathNormalization::none});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double want = enumerate_walks(adj, pairs[i].left, g.left_count() + pairs[i].right, 5,
                                          [](std::size_t) { return 1.0; });
      ASSERT_EQ(raw.scores[i], want);
    }
  }
}

TEST(PathIndex, ParallelMatchesSerialReference) {
  std::mt19937_64 rng(12);
  const auto g = random_graph(rng, 60, 90, 0.08);
  const auto pairs = candidate_pairs(g);
  for (int length : {3, 5, 7}) {
    const auto fast = score_path_index(g, pairs, length);
    const auto slow = reference::path_index(g, pairs, length);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      ASSERT_LE(relative_error(fast.scores[i], slow[i]), 1e-12);
  }
}

TEST(Lp, WorkedExample) {
  const auto g = example_graph();
  const std::vector<Pair> q = {{0, 2}, {1, 0}};
  const auto t = score_lp(g, 0.001, q);
  EXPECT_DOUBLE_EQ(t.scores[0], 0.001);
  EXPECT_DOUBLE_EQ(t.scores[1], 0.001);
}

TEST(Lp, MatchesWalkEnumerationAndRawRanking) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_small_graph(rng, 12);
    const auto adj = unified_adjacency(g);
    const auto pairs = all_pairs(g);
    const auto t = score_lp(g, 0.001, pairs);
    const auto raw = score_path_index(g, pairs, PathIndexParams{3, PathNormalization::none});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double a2 = enumerate_walks(adj, pairs[i].left, g.left_count() + pairs[i].right, 2,
                                        [](std::size_t) { return 1.0; });
      const double a3 = enumerate_walks(adj, pairs[i].left, g.left_count() + pairs[i].right, 3,
                                        [](std::size_t) { return 1.0; });
      ASSERT_EQ(a2, 0.0);
      ASSERT_LE(relative_error(t.scores[i], a2 + 0.001 * a3), 1e-12);
      for (std::size_t j = 0; j < pairs.size(); ++j)
        ASSERT_EQ(t.scores[i] < t.scores[j], raw.scores[i] < raw.scores[j]);
    }
  }
}

TEST(Lp, NonPositiveEpsilonRejected) {
  const auto g = example_graph();
  EXPECT_THROW(score_lp(g, 0.0, all_pairs(g)), ArgumentError);
}

TEST(Katz, SingleEdgeGeometricSeries) {
  const auto g = BipartiteGraph::from_edges(1, 1, {{0, 0}});
  const std::vector<Pair> q = {{0, 0}};
  KatzParams p;
  p.alpha = 0.5;
  p.max_length = 1000;
  EXPECT_NEAR(score_katz(g, p, q).scores[0], 0.5 / (1 - 0.25), 1e-11);
  // default truncation at length 21 leaves a tail of about (1/2)^23
  p.max_length = 21;
  EXPECT_NEAR(score_katz(g, p, q).scores[0], 2.0 / 3.0, 2e-7);
}

TEST(Katz, DisconnectedPairScoresZero) {
  const auto g = BipartiteGraph::from_edges(2, 2, {{0, 0}, {1, 1}});
  const std::vector<Pair> q = {{0, 1}};
  EXPECT_EQ(score_katz(g, KatzParams{0.1, 21, 1e-12}, q).scores[0], 0.0);
}

TEST(Katz, DivergentAlphaReportsAdmissibleMaximum) {
  const auto g = BipartiteGraph::from_edges(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  try {
    score_katz(g, KatzParams{0.6, 21, 1e-12}, all_pairs(g));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NEAR(e.admissible_max(), 0.5, 1e-8);  // spectral radius of K_{2,2} is 2
  }
}

TEST(Katz, MatchesDenseInverse) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> share(0.05, 0.6);
  int tested = 0;
  while (tested < 100) {
    const auto g = random_small_graph(rng, 15);
    if (g.edge_count() == 0) continue;
    ++tested;
    const auto a = dense(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    const double alpha = share(rng) / rho;
    const auto n = a.rows();
    const Eigen::MatrixXd oracle =
        (Eigen::MatrixXd::Identity(n, n) - alpha * a).inverse() - Eigen::MatrixXd::Identity(n, n);
    const auto pairs = all_pairs(g);
    const auto t = score_katz(g, KatzParams{alpha, 400, 1e-14}, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      ASSERT_NEAR(t.scores[i], oracle(pairs[i].left, g.left_count() + pairs[i].right), 1e-8);
  }
}

TEST(Katz, ParallelMatchesSerialReference) {
  std::mt19937_64 rng(15);
  const auto g = random_graph(rng, 50, 70, 0.1);
  const auto pairs = candidate_pairs(g);
  const KatzParams p{0.02, 21, 0.0};
  const auto fast = score_katz(g, p, pairs);
  const auto slow = reference::katz(g, p.alpha, p.max_length, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) ASSERT_LE(relative_error(fast.scores[i], slow[i]), 1e-12);
}

TEST(Katz, NonNegative) {
  std::mt19937_64 rng(16);
  const auto g = random_graph(rng, 20, 25, 0.2);
  const auto t = score_katz(g, KatzParams{}, all_pairs(g));
  for (double s : t.scores) EXPECT_GE(s, 0.0);
}

TEST(Pa, Examples) {
  const auto g = example_graph();
  const std::vector<Pair> q = {{0, 2}};
  EXPECT_EQ(score_pa(g, q).scores[0], 2.0);

  const auto iso = BipartiteGraph::from_edges(1, 2, {{0, 0}});
  const std::vector<Pair> q2 = {{0, 1}};
  EXPECT_EQ(score_pa(iso, q2).scores[0], 0.0);

  std::vector<Pair> all;
  for (NodeId u = 0; u < 3; ++u)
    for (NodeId v = 0; v < 4; ++v) all.push_back({u, v});
  const auto k = BipartiteGraph::from_edges(3, 4, all);
  for (double s : score_pa(k, all).scores) EXPECT_EQ(s, 12.0);
}

TEST(Dist, Examples) {
  const auto g = example_graph();
  const std::vector<Pair> q = {{0, 2}, {0, 0}};
  const auto t = score_dist(g, q);
  EXPECT_DOUBLE_EQ(t.scores[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.scores[1], 1.0);
  const auto two = BipartiteGraph::from_edges(2, 2, {{0, 0}, {1, 1}});
  const std::vector<Pair> q2 = {{0, 1}};
  EXPECT_EQ(score_dist(two, q2).scores[0], 0.0);
}

TEST(Dist, MatchesBfsOracleAndDistancesAreOdd) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_small_graph(rng, 12);
    const auto pairs = all_pairs(g);
    const auto fast = score_dist(g, pairs);
    const auto slow = reference::dist(g, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      ASSERT_EQ(fast.scores[i], slow[i]);
      if (fast.scores[i] > 0) {
        const auto d = std::llround(1.0 / fast.scores[i]);
        EXPECT_EQ(d % 2, 1);
      }
    }
  }
}

TEST(Rank, TopScoresWithLexicographicTies) {
  ScoreTable t;
  t.pairs = {{0, 0}, {0, 1}, {1, 0}};
  t.scores = {3, 2, 1};
  EXPECT_EQ(rank_and_select(t, 2), (PairList{{0, 0}, {0, 1}}));
  t.scores = {5, 5, 5};
  t.pairs = {{1, 0}, {0, 1}, {0, 0}};
  EXPECT_EQ(rank_and_select(t, 2), (PairList{{0, 0}, {0, 1}}));
  EXPECT_EQ(rank_and_select(t, 3).size(), 3u);
  EXPECT_THROW(rank_and_select(t, 4), ArgumentError);
}

TEST(Rank, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(18);
  const auto g = random_graph(rng, 15, 20, 0.2);
  auto t = score_path_index(g, candidate_pairs(g), 3);
  const auto before = rank_and_select(t, 25);
  for (auto& s : t.scores) s = std::ldexp(s, 3) - 1.0;
  EXPECT_EQ(rank_and_select(t, 25), before);
}

TEST(ScoreTable, DeterministicAndRoundTrips) {
  std::mt19937_64 rng(19);
  const auto g = random_graph(rng, 30, 40, 0.15);
  const auto pairs = candidate_pairs(g);
  const auto a = score_path_index(g, pairs, 5);
  const auto b = score_path_index(g, pairs, 5);
  EXPECT_EQ(a.scores, b.scores);

  const auto dir = scratch_dir("scores");
  write_score_table(a, g, dir / "s.tsv");
  const auto r = read_score_table(dir / "s.tsv", g);
  EXPECT_EQ(r.method_name, a.method_name);
  EXPECT_EQ(r.pairs, a.pairs);
  EXPECT_EQ(r.scores, a.scores);
  EXPECT_EQ(r.graph_fingerprint, g.fingerprint());
}

TEST(ScoreTable, ValidateCatchesBadTables) {
  ScoreTable t;
  t.pairs = {{0, 0}, {0, 0}};
  t.scores = {1, 2};
  EXPECT_THROW(t.validate(), SchemaError);
  t.pairs = {{0, 0}};
  EXPECT_THROW(t.validate(), SchemaError);
  t.scores = {NAN};
  EXPECT_THROW(t.validate(), SchemaError);
}
