#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bplp/graph.hpp"
#include "bplp/scores.hpp"

namespace bplp {

struct SpmParams {
  double perturbation_fraction = 0.1;  // share of train edges removed per repetition
  int repetitions = 10;
  double degeneracy_tolerance = 1e-10;  // eigenvalue gap below which values cluster
  std::size_t node_cap = 5000;          // refuse dense work above this many nodes
};

struct SpmDiagnostics {
  int repetitions = 0;
  std::size_t perturbation_size = 0;
  std::size_t degenerate_clusters = 0;     // summed over repetitions
  std::size_t degenerate_eigenvalues = 0;  // eigenvalues inside those clusters
  std::vector<double> repetition_seconds;
};

/// Eigenvalues in ascending order with unit-norm eigenvectors as columns.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Full eigendecomposition of a dense symmetric matrix (LAPACK dsyevd).
SymmetricEigen symmetric_eigen(Eigen::MatrixXd matrix);

/// Dense symmetric adjacency over [left nodes, right nodes] for the given edges.
Eigen::MatrixXd dense_adjacency(std::size_t left_count, std::size_t right_count,
                                std::span<const Pair> edges);

/// First-order eigenvalue corrections dl_k = x_k^T dA x_k for a perturbation
/// made of the given cross-side edges. Corrections are averaged inside
/// clusters of eigenvalues whose consecutive gaps are below `tolerance`;
/// `clusters` / `clustered` report what was merged.
Eigen::VectorXd eigenvalue_corrections(const SymmetricEigen& eigen, std::size_t left_count,
                                       std::span<const Pair> perturbation, double tolerance,
                                       std::size_t* clusters = nullptr,
                                       std::size_t* clustered = nullptr);

/// Perturbed reconstruction sum_k (l_k + dl_k) x_k x_k^T restricted to the
/// left x right block (left_count x right_count).
Eigen::MatrixXd perturbed_cross_block(const SymmetricEigen& eigen, const Eigen::VectorXd& shifted,
                                      std::size_t left_count);

struct SpmPerturbation {
  PairList removed;  // the perturbation set, sorted
  PairList kept;     // remaining edges, sorted
};

/// Uniformly draws `n_removed` edges of the graph to hold out.
SpmPerturbation spm_perturbation(const BipartiteGraph& graph, std::size_t n_removed,
                                 std::uint64_t seed);

/// Structural perturbation scores averaged over independent perturbations.
ScoreTable score_spm(const BipartiteGraph& graph, const SpmParams& params,
                     std::span<const Pair> pairs, std::uint64_t seed,
                     SpmDiagnostics* diagnostics = nullptr);
/// Repetition r uses spm_perturbation(graph, round(fraction * |L|), derive_seed(seed, r)).

}  // namespace bplp
