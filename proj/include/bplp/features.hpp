#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bplp/graph.hpp"

namespace bplp {

struct MeasureConfig {
  double pagerank_damping = 0.85;
  double pagerank_tolerance = 1e-9;  // L1 change between iterates
  double eigenvector_tolerance = 1e-12;
  double katz_alpha = 0.001;
  double katz_beta = 1.0;
  double katz_tolerance = 1e-12;
  int max_iterations = 10000;
};

/// Per-node measures over all nodes; index i < |U| is left node i, index
/// |U| + j is right node j.
struct NodeMeasures {
  std::vector<double> pagerank;
  std::vector<double> degree_centrality;
  std::vector<double> closeness;
  std::vector<double> betweenness;
  std::vector<double> eigenvector_centrality;
  std::vector<double> katz_centrality;
  double eigenvalue = 0.0;  // leading eigenvalue found with the eigenvector
};

inline constexpr std::size_t kMeasureCount = 6;
inline constexpr std::size_t kFeatureWidth = 2 * kMeasureCount + 1;

/// Column names in feature order: left_*, right_*, pa.
const std::array<std::string, kFeatureWidth>& feature_names();

/// Row-major matrix of pair features with labels.
struct PairFeatures {
  PairList pairs;
  std::vector<double> values;  // pairs.size() x kFeatureWidth
  std::vector<int> labels;     // 1 = train edge, 0 = sampled non-edge (empty for unlabeled)

  std::size_t rows() const noexcept { return pairs.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values.data() + i * kFeatureWidth, kFeatureWidth};
  }
};

std::vector<double> pagerank(const BipartiteGraph& graph, double damping, double tolerance,
                             int max_iterations);
std::vector<double> degree_centrality(const BipartiteGraph& graph);
/// Wasserman-Faust closeness: (r / sum d) * (r / (N - 1)), r = reachable nodes.
std::vector<double> closeness_centrality(const BipartiteGraph& graph);
/// Brandes betweenness on the undirected graph, unnormalized, each
/// unordered pair counted once.
std::vector<double> betweenness_centrality(const BipartiteGraph& graph);
/// Unit-L2 leading eigenvector of A, largest-magnitude entry positive.
std::vector<double> eigenvector_centrality(const BipartiteGraph& graph, double tolerance,
                                           int max_iterations, double* eigenvalue = nullptr);
/// Fixed point of x = alpha A x + beta, scaled to unit L2 norm.
std::vector<double> katz_centrality(const BipartiteGraph& graph, double alpha, double beta,
                                    double tolerance, int max_iterations);

NodeMeasures compute_node_measures(const BipartiteGraph& graph, const MeasureConfig& config = {});

/// n distinct uniformly drawn cross-side non-edges.
PairList negative_sample(const BipartiteGraph& graph, std::size_t n, std::uint64_t seed);

/// Feature rows for arbitrary pairs (no labels).
PairFeatures pair_features(const BipartiteGraph& graph, const NodeMeasures& measures,
                           std::span<const Pair> pairs);

/// All train edges as positives plus as many sampled negatives, shuffled.
PairFeatures build_pair_dataset(const BipartiteGraph& graph, const NodeMeasures& measures,
                                std::uint64_t seed);

/// CSV with a named header and the label column last.
void write_pair_features(const PairFeatures& data, const std::filesystem::path& path);

}  // namespace bplp
