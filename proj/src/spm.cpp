#include "bplp/spm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include <cblas.h>
#include <lapacke.h>

#include "json.hpp"

#include "bplp/error.hpp"
#include "bplp/log.hpp"
#include "bplp/rng.hpp"

namespace bplp {

SymmetricEigen symmetric_eigen(Eigen::MatrixXd matrix) {
  if (matrix.rows() != matrix.cols()) throw ArgumentError("eigendecomposition needs a square matrix");
  const auto n = static_cast<lapack_int>(matrix.rows());
  SymmetricEigen out;
  out.values.resize(n);
  if (n == 0) return out;
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, matrix.data(), n, out.values.data());
  if (info != 0)
    throw ConvergenceError("dsyevd failed with info=" + std::to_string(info));
  out.vectors = std::move(matrix);
  return out;
}

Eigen::MatrixXd dense_adjacency(std::size_t left_count, std::size_t right_count,
                                std::span<const Pair> edges) {
  const auto n = static_cast<Eigen::Index>(left_count + right_count);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges) {
    const auto i = static_cast<Eigen::Index>(e.left);
    const auto j = static_cast<Eigen::Index>(left_count + e.right);
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

Eigen::VectorXd eigenvalue_corrections(const SymmetricEigen& eigen, std::size_t left_count,
                                       std::span<const Pair> perturbation, double tolerance,
                                       std::size_t* clusters, std::size_t* clustered) {
  const auto n = eigen.values.size();
  const auto& x = eigen.vectors;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  // x_k^T dA x_k with dA symmetric 0/1: each edge (i, j) contributes 2 x_ik x_jk
  for (const auto& e : perturbation) {
    const auto i = static_cast<Eigen::Index>(e.left);
    const auto j = static_cast<Eigen::Index>(left_count + e.right);
    delta += 2.0 * x.row(i).transpose().cwiseProduct(x.row(j).transpose());
  }

  std::size_t n_clusters = 0, n_clustered = 0;
  Eigen::Index begin = 0;
  while (begin < n) {
    Eigen::Index end = begin + 1;
    while (end < n && eigen.values[end] - eigen.values[end - 1] < tolerance) ++end;
    if (end - begin > 1) {
      delta.segment(begin, end - begin).setConstant(delta.segment(begin, end - begin).mean());
      ++n_clusters;
      n_clustered += static_cast<std::size_t>(end - begin);
    }
    begin = end;
  }
  if (clusters) *clusters = n_clusters;
  if (clustered) *clustered = n_clustered;
  return delta;
}

Eigen::MatrixXd perturbed_cross_block(const SymmetricEigen& eigen, const Eigen::VectorXd& shifted,
                                      std::size_t left_count) {
  const auto n = eigen.vectors.rows();
  const auto nl = static_cast<Eigen::Index>(left_count);
  const auto nr = n - nl;
  // scaled = X_left * diag(shifted), then block = scaled * X_right^T
  Eigen::MatrixXd scaled = eigen.vectors.topRows(nl) * shifted.asDiagonal();
  Eigen::MatrixXd right = eigen.vectors.bottomRows(nr);
  Eigen::MatrixXd block(nl, nr);
  if (nl == 0 || nr == 0) return block;
  cblas_dgemm(CblasColMajor, CblasNoTrans, CblasTrans, static_cast<int>(nl), static_cast<int>(nr),
              static_cast<int>(n), 1.0, scaled.data(), static_cast<int>(nl), right.data(),
              static_cast<int>(nr), 0.0, block.data(), static_cast<int>(nl));
  return block;
}

SpmPerturbation spm_perturbation(const BipartiteGraph& graph, std::size_t n_removed,
                                 std::uint64_t seed) {
  const auto edges = graph.edges();
  if (n_removed > edges.size()) throw ArgumentError("SPM: cannot remove more edges than exist");
  Rng rng(seed);
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < n_removed; ++i)
    std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);
  std::vector<char> is_removed(edges.size(), 0);
  for (std::size_t i = 0; i < n_removed; ++i) is_removed[order[i]] = 1;
  SpmPerturbation out;
  out.removed.reserve(n_removed);
  out.kept.reserve(edges.size() - n_removed);
  for (std::size_t i = 0; i < edges.size(); ++i)
    (is_removed[i] ? out.removed : out.kept).push_back(edges[i]);
  return out;
}

ScoreTable score_spm(const BipartiteGraph& graph, const SpmParams& params,
                     std::span<const Pair> pairs, std::uint64_t seed,
                     SpmDiagnostics* diagnostics) {
  if (!(params.perturbation_fraction >= 0.0 && params.perturbation_fraction < 1.0))
    throw ArgumentError("SPM perturbation_fraction must lie in [0, 1)");
  if (params.repetitions < 1) throw ArgumentError("SPM repetitions must be >= 1");
  if (graph.node_count() > params.node_cap) {
    throw GuardError("SPM needs a dense eigendecomposition of a " +
                     std::to_string(graph.node_count()) + "-node adjacency; the node cap is " +
                     std::to_string(params.node_cap) + " (raise spm.node_cap to override)");
  }
  for (const auto& p : pairs)
    if (p.left >= graph.left_count() || p.right >= graph.right_count())
      throw SchemaError("SPM: pair outside the graph");

  ScoreTable table;
  table.method_name = "SPM";
  table.pairs.assign(pairs.begin(), pairs.end());
  table.scores.assign(pairs.size(), 0.0);
  table.graph_fingerprint = graph.fingerprint();
  table.seed = seed;
  table.params = nlohmann::json{{"perturbation_fraction", params.perturbation_fraction},
                                {"repetitions", params.repetitions},
                                {"degeneracy_tolerance", params.degeneracy_tolerance}}
                     .dump();

  const auto edges = graph.edges();
  const auto n_perturb = static_cast<std::size_t>(
      std::llround(params.perturbation_fraction * static_cast<double>(edges.size())));
  SpmDiagnostics diag;
  diag.perturbation_size = n_perturb;

  for (int rep = 0; rep < params.repetitions; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    const auto [removed, kept] = spm_perturbation(graph, n_perturb, derive_seed(seed, static_cast<std::uint64_t>(rep)));

    const auto eigen =
        symmetric_eigen(dense_adjacency(graph.left_count(), graph.right_count(), kept));
    std::size_t clusters = 0, clustered = 0;
    const Eigen::VectorXd delta = eigenvalue_corrections(
        eigen, graph.left_count(), removed, params.degeneracy_tolerance, &clusters, &clustered);
    const Eigen::MatrixXd block =
        perturbed_cross_block(eigen, eigen.values + delta, graph.left_count());
    for (std::size_t i = 0; i < pairs.size(); ++i)
      table.scores[i] += block(pairs[i].left, pairs[i].right);

    diag.degenerate_clusters += clusters;
    diag.degenerate_eigenvalues += clustered;
    if (clusters > 0) {
      log(LogLevel::debug, "SPM repetition " + std::to_string(rep) + ": averaged corrections over " +
                               std::to_string(clusters) + " degenerate eigenvalue cluster(s) covering " +
                               std::to_string(clustered) + " eigenvalues");
    }
    diag.repetition_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  for (auto& s : table.scores) s /= params.repetitions;
  diag.repetitions = params.repetitions;
  if (diagnostics) *diagnostics = std::move(diag);
  return table;
}

}  // namespace bplp
