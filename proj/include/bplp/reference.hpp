#pragma once

#include <span>
#include <vector>

#include "bplp/graph.hpp"
#include "bplp/recsys.hpp"
#include "bplp/scores.hpp"

/// Single-threaded reference versions of the parallel kernels. They share no
/// code with the production paths and exist for cross-checking and benchmarks.
namespace bplp::reference {

/// Degree-normalized odd-length walk scores, pull formulation.
std::vector<double> path_index(const BipartiteGraph& graph, std::span<const Pair> pairs, int length);

/// Truncated Katz series sum_{l odd <= max_length} alpha^l (A^l)_xy, no early exit.
std::vector<double> katz(const BipartiteGraph& graph, double alpha, int max_length,
                         std::span<const Pair> pairs);

/// Reciprocal BFS distance; 0 when unreachable.
std::vector<double> dist(const BipartiteGraph& graph, std::span<const Pair> pairs);

std::vector<double> closeness(const BipartiteGraph& graph);
std::vector<double> betweenness(const BipartiteGraph& graph);

/// Layer-mean propagation by scattering along each edge.
EmbeddingTable propagate(const EmbeddingTable& embeddings, const BipartiteGraph& graph, int layers);

}  // namespace bplp::reference
