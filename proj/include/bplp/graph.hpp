#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bplp {

using NodeId = std::uint32_t;

/// A cross-side node pair (left node, right node).
struct Pair {
  NodeId left = 0;
  NodeId right = 0;

  friend auto operator<=>(const Pair&, const Pair&) = default;
};

using PairList = std::vector<Pair>;

enum class EdgeFormat { tsv_pair, movielens_u_data };

EdgeFormat parse_edge_format(const std::string& name);
std::string to_string(EdgeFormat format);

/// Immutable two-sided graph in compressed sparse form, stored in both
/// orientations. Edges are unique and sorted by (left, right).
class BipartiteGraph {
 public:
  BipartiteGraph() = default;

  /// Builds from an edge list. Duplicates collapse; ids must be in range.
  static BipartiteGraph from_edges(std::size_t left_count,
                                   std::size_t right_count,
                                   std::vector<Pair> edges);

  std::size_t left_count() const noexcept { return left_count_; }
  std::size_t right_count() const noexcept { return right_count_; }
  std::size_t node_count() const noexcept { return left_count_ + right_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const Pair> edges() const noexcept { return edges_; }

  std::span<const NodeId> left_neighbors(NodeId u) const noexcept {
    return {left_idx_.data() + left_ptr_[u], left_ptr_[u + 1] - left_ptr_[u]};
  }
  std::span<const NodeId> right_neighbors(NodeId v) const noexcept {
    return {right_idx_.data() + right_ptr_[v], right_ptr_[v + 1] - right_ptr_[v]};
  }
  std::size_t left_degree(NodeId u) const noexcept {
    return left_ptr_[u + 1] - left_ptr_[u];
  }
  std::size_t right_degree(NodeId v) const noexcept {
    return right_ptr_[v + 1] - right_ptr_[v];
  }

  bool has_edge(NodeId u, NodeId v) const noexcept;

  /// Raw CSR arrays (left rows -> right columns, and the transpose).
  std::span<const std::size_t> left_offsets() const noexcept { return left_ptr_; }
  std::span<const NodeId> left_indices() const noexcept { return left_idx_; }
  std::span<const std::size_t> right_offsets() const noexcept { return right_ptr_; }
  std::span<const NodeId> right_indices() const noexcept { return right_idx_; }

  /// Original ids per side, in dense-index order. Empty when built from ids.
  const std::vector<std::string>& left_labels() const noexcept { return left_labels_; }
  const std::vector<std::string>& right_labels() const noexcept { return right_labels_; }
  void set_labels(std::vector<std::string> left, std::vector<std::string> right);

  std::string left_label(NodeId u) const;
  std::string right_label(NodeId v) const;

  /// FNV-1a hash of (left_count, right_count, edges).
  std::uint64_t fingerprint() const noexcept;

  /// Same node sets, different edge subset (must be edges of valid ids).
  BipartiteGraph with_edges(std::vector<Pair> edges) const;

 private:
  std::size_t left_count_ = 0;
  std::size_t right_count_ = 0;
  std::vector<Pair> edges_;
  std::vector<std::size_t> left_ptr_{0};
  std::vector<NodeId> left_idx_;
  std::vector<std::size_t> right_ptr_{0};
  std::vector<NodeId> right_idx_;
  std::vector<std::string> left_labels_;
  std::vector<std::string> right_labels_;
};

/// Train/test partition of a graph's edges.
struct EdgeSplit {
  std::vector<Pair> train_edges;
  std::vector<Pair> test_edges;
  std::uint64_t seed = 0;
  double test_fraction = 0.1;
};

BipartiteGraph load_edge_list(const std::filesystem::path& path, EdgeFormat format);

/// Parses edge-list text; `source` names the input in error messages.
BipartiteGraph parse_edge_list(std::istream& in, EdgeFormat format,
                               const std::string& source = "<stream>");

/// Writes `tsv_pair` using original labels when present.
void write_edge_list(const BipartiteGraph& graph, const std::filesystem::path& path);
void write_edge_list(const BipartiteGraph& graph, std::span<const Pair> edges,
                     const std::filesystem::path& path);

double density(const BipartiteGraph& graph);

/// Mean degree over all nodes, 2|L| / (|U| + |V|).
double mean_degree_all(const BipartiteGraph& graph);
/// Mean degree of left nodes, |L| / |U|.
double mean_degree_left(const BipartiteGraph& graph);

/// Drops left nodes with degree < min_left_degree (single pass), then drops
/// right nodes left isolated. Ids are re-densified in original order.
BipartiteGraph min_degree_filter(const BipartiteGraph& graph, std::size_t min_left_degree);

/// Number of test edges taken from a left node of degree k.
std::size_t per_node_test_count(std::size_t degree, double test_fraction);

EdgeSplit split_per_left_node(const BipartiteGraph& graph, double test_fraction,
                              std::uint64_t seed);

/// Graph restricted to the split's train edges (same node sets).
BipartiteGraph train_graph(const BipartiteGraph& graph, const EdgeSplit& split);

/// All (u, v) in U x V that are not train edges, sorted.
PairList candidate_pairs(const BipartiteGraph& graph, const EdgeSplit& split);
PairList candidate_pairs(const BipartiteGraph& train);

/// Writes train.tsv, test.tsv and split.json into `dir`.
void write_split(const BipartiteGraph& graph, const EdgeSplit& split,
                 const std::filesystem::path& dir);
/// Reads a split written by write_split against the graph it came from.
EdgeSplit read_split(const BipartiteGraph& graph, const std::filesystem::path& dir);

}  // namespace bplp
