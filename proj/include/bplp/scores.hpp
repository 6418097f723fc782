#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bplp/graph.hpp"

namespace bplp {

/// Scores one method assigned to a set of candidate pairs.
struct ScoreTable {
  std::string method_name;
  PairList pairs;
  std::vector<double> scores;
  std::uint64_t graph_fingerprint = 0;
  std::string params;  // compact JSON of the parameters used
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return pairs.size(); }
  /// Throws if lengths differ, a score is not finite, or a pair repeats.
  void validate() const;
};

void write_score_table(const ScoreTable& table, const BipartiteGraph& graph,
                       const std::filesystem::path& path);
/// Reads a table written by write_score_table; labels are resolved against `graph`.
ScoreTable read_score_table(const std::filesystem::path& path, const BipartiteGraph& graph);

/// How a walk through intermediate nodes is weighted in the path indices.
enum class PathNormalization {
  sqrt_degree,  // each intermediate node contributes 1/sqrt(k)
  none,         // raw walk counts
};

struct PathIndexParams {
  int length = 3;
  PathNormalization normalization = PathNormalization::sqrt_degree;
};

struct KatzParams {
  double alpha = 0.001;
  int max_length = 21;
  double tolerance = 1e-12;
};

/// Groups a pair list by left node so kernels can work one row at a time.
class PairRows {
 public:
  PairRows(std::size_t left_count, std::span<const Pair> pairs);

  std::size_t left_count() const noexcept { return ptr_.size() - 1; }
  /// Positions (into the original pair list) of the pairs with this left node.
  std::span<const std::size_t> row(NodeId u) const noexcept {
    return {order_.data() + ptr_[u], ptr_[u + 1] - ptr_[u]};
  }

 private:
  std::vector<std::size_t> ptr_;
  std::vector<std::size_t> order_;
};

/// Degree-normalized odd-length walk index (L3, L5, L7, ...).
ScoreTable score_path_index(const BipartiteGraph& graph, std::span<const Pair> pairs,
                            const PathIndexParams& params);
inline ScoreTable score_path_index(const BipartiteGraph& graph, std::span<const Pair> pairs,
                                   int length) {
  return score_path_index(graph, pairs, PathIndexParams{length, PathNormalization::sqrt_degree});
}

/// Largest singular value of the biadjacency matrix, i.e. the spectral
/// radius of the symmetric adjacency. Power iteration on B^T B.
double spectral_radius(const BipartiteGraph& graph, double tolerance = 1e-10,
                       int max_iterations = 10000);

/// Throws DivergenceError unless alpha * spectral_radius < 1. Returns the radius.
double check_katz_alpha(const BipartiteGraph& graph, double alpha);

ScoreTable score_katz(const BipartiteGraph& graph, const KatzParams& params,
                      std::span<const Pair> pairs);

/// Local-path index restricted to cross-side pairs: epsilon * (A^3)_xy.
ScoreTable score_lp(const BipartiteGraph& graph, double epsilon, std::span<const Pair> pairs);

/// Preferential attachment, k_x * k_y.
ScoreTable score_pa(const BipartiteGraph& graph, std::span<const Pair> pairs);

/// Reciprocal shortest-path distance; 0 when unreachable.
ScoreTable score_dist(const BipartiteGraph& graph, std::span<const Pair> pairs);

/// Top-n pairs by score, ties broken by ascending (left, right).
PairList rank_and_select(const ScoreTable& scores, std::size_t n);

}  // namespace bplp
