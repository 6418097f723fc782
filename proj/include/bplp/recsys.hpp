#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bplp/graph.hpp"
#include "bplp/scores.hpp"

namespace bplp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense per-node latent vectors for both sides.
struct EmbeddingTable {
  RowMatrix left;   // |U| x dim
  RowMatrix right;  // |V| x dim

  Eigen::Index dim() const noexcept { return left.cols(); }
  void validate() const;
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
  int dim = 64;
  int epochs = 300;
  double learning_rate = 0.001;
  double l2_reg = 1e-4;
  std::size_t batch_size = 2048;
  int layers = 3;  // LightGCN propagation depth; 0 reduces to plain BPR
  double init_stddev = 0.01;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 0;
};

/// One (user, observed item, unobserved item) training example.
struct Triplet {
  NodeId user;
  NodeId positive;
  NodeId negative;
};

/// Symmetric normalized propagation P = D^-1/2 A D^-1/2 on the bipartite
/// adjacency. Zero-degree nodes map to zero.
class Propagator {
 public:
  explicit Propagator(const BipartiteGraph& graph);

  /// out = P * in, for stacked [left; right] embeddings.
  void apply(const EmbeddingTable& in, EmbeddingTable& out) const;
  /// out = P^T * in, evaluated through the transposed sparse structure.
  void apply_transpose(const EmbeddingTable& in, EmbeddingTable& out) const;

  /// Mean of P^0 E ... P^layers E.
  EmbeddingTable layer_mean(const EmbeddingTable& base, int layers) const;
  /// Adjoint of layer_mean applied to a gradient w.r.t. its output.
  EmbeddingTable layer_mean_adjoint(const EmbeddingTable& grad_out, int layers) const;

 private:
  const BipartiteGraph* graph_;
  std::vector<double> left_scale_, right_scale_;  // 1/sqrt(k) or 0
};

/// LightGCN propagation: mean over layers 0..layers of the normalized walk.
EmbeddingTable propagate_lightgcn(const EmbeddingTable& embeddings, const BipartiteGraph& graph,
                                  int layers);

/// Mean BPR objective over a batch and its gradient w.r.t. the base
/// embeddings: mean_t[-ln sigmoid(x_ui - x_uj)] + l2_reg * mean_t(|e_u|^2 + |e_i|^2 + |e_j|^2),
/// with scores taken from the propagated embeddings and the penalty on
/// the base embeddings.
double bpr_loss_and_gradient(const EmbeddingTable& base, const Propagator& propagator, int layers,
                             std::span<const Triplet> batch, double l2_reg,
                             EmbeddingTable* gradient);

/// Per-epoch record of the training run.
struct TrainLog {
  std::vector<double> epoch_loss;
};

/// Trains LightGCN-style embeddings; config.layers == 0 is BPR matrix
/// factorization. Returns the propagated embeddings used for scoring and,
/// if requested, the base embeddings.
EmbeddingTable train_lightgcn(const BipartiteGraph& graph, const TrainConfig& config,
                              EmbeddingTable* base = nullptr, TrainLog* log = nullptr);

/// BPR matrix factorization (LightGCN with zero layers).
EmbeddingTable train_bpr(const BipartiteGraph& graph, TrainConfig config,
                         TrainLog* log = nullptr);

/// Embedding initialization used by training: N(0, init_stddev^2), seeded.
EmbeddingTable initial_embeddings(const BipartiteGraph& graph, const TrainConfig& config);

/// score(u, v) = <e_u, e_v>.
ScoreTable scores_from_embeddings(const EmbeddingTable& embeddings, std::span<const Pair> pairs,
                                  std::string method_name = "embedding");

/// Text dump: header "# dim <d> left <n> right <m>", then one row per node.
void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

}  // namespace bplp
