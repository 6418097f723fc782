#include "bplp/recsys.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "bplp/error.hpp"
#include "bplp/log.hpp"
#include "bplp/parallel.hpp"
#include "bplp/rng.hpp"

namespace bplp {

void EmbeddingTable::validate() const {
  if (left.cols() != right.cols()) throw SchemaError("embedding sides differ in dimension");
  if (!left.allFinite() || !right.allFinite()) throw SchemaError("embeddings contain non-finite values");
}

Propagator::Propagator(const BipartiteGraph& graph)
    : graph_(&graph), left_scale_(graph.left_count()), right_scale_(graph.right_count()) {
  for (NodeId u = 0; u < graph.left_count(); ++u) {
    const auto k = graph.left_degree(u);
    left_scale_[u] = k == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(k));
  }
  for (NodeId v = 0; v < graph.right_count(); ++v) {
    const auto k = graph.right_degree(v);
    right_scale_[v] = k == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(k));
  }
}

namespace {

void shape_like(const EmbeddingTable& in, EmbeddingTable& out) {
  out.left.resize(in.left.rows(), in.left.cols());
  out.right.resize(in.right.rows(), in.right.cols());
}

}  // namespace

void Propagator::apply(const EmbeddingTable& in, EmbeddingTable& out) const {
  const auto& g = *graph_;
  shape_like(in, out);
  // rows of P: left block reads right embeddings and vice versa
  parallel_rows(
      g.left_count(), [] { return 0; },
      [&](std::size_t u, int&) {
        auto row = out.left.row(static_cast<Eigen::Index>(u));
        row.setZero();
        for (NodeId v : g.left_neighbors(static_cast<NodeId>(u)))
          row += (left_scale_[u] * right_scale_[v]) * in.right.row(v);
      });
  parallel_rows(
      g.right_count(), [] { return 0; },
      [&](std::size_t v, int&) {
        auto row = out.right.row(static_cast<Eigen::Index>(v));
        row.setZero();
        for (NodeId u : g.right_neighbors(static_cast<NodeId>(v)))
          row += (right_scale_[v] * left_scale_[u]) * in.left.row(u);
      });
}

void Propagator::apply_transpose(const EmbeddingTable& in, EmbeddingTable& out) const {
  const auto& g = *graph_;
  shape_like(in, out);
  // (P^T y)_u = sum_v P(v, u) y_v: column u of the right->left block is
  // row u of the left CSR, so the same gather applies with entries P(v, u).
  parallel_rows(
      g.left_count(), [] { return 0; },
      [&](std::size_t u, int&) {
        auto row = out.left.row(static_cast<Eigen::Index>(u));
        row.setZero();
        for (NodeId v : g.left_neighbors(static_cast<NodeId>(u)))
          row += (right_scale_[v] * left_scale_[u]) * in.right.row(v);
      });
  parallel_rows(
      g.right_count(), [] { return 0; },
      [&](std::size_t v, int&) {
        auto row = out.right.row(static_cast<Eigen::Index>(v));
        row.setZero();
        for (NodeId u : g.right_neighbors(static_cast<NodeId>(v)))
          row += (left_scale_[u] * right_scale_[v]) * in.left.row(u);
      });
}

EmbeddingTable Propagator::layer_mean(const EmbeddingTable& base, int layers) const {
  if (layers < 0) throw ArgumentError("layers must be >= 0");
  EmbeddingTable acc = base, cur = base, next;
  for (int l = 0; l < layers; ++l) {
    apply(cur, next);
    acc.left += next.left;
    acc.right += next.right;
    std::swap(cur, next);
  }
  if (layers > 0) {
    const double inv = 1.0 / (layers + 1);
    acc.left *= inv;
    acc.right *= inv;
  }
  return acc;
}

EmbeddingTable Propagator::layer_mean_adjoint(const EmbeddingTable& grad_out, int layers) const {
  if (layers < 0) throw ArgumentError("layers must be >= 0");
  EmbeddingTable acc = grad_out, cur = grad_out, next;
  for (int l = 0; l < layers; ++l) {
    apply_transpose(cur, next);
    acc.left += next.left;
    acc.right += next.right;
    std::swap(cur, next);
  }
  if (layers > 0) {
    const double inv = 1.0 / (layers + 1);
    acc.left *= inv;
    acc.right *= inv;
  }
  return acc;
}

EmbeddingTable propagate_lightgcn(const EmbeddingTable& embeddings, const BipartiteGraph& graph,
                                  int layers) {
  if (static_cast<std::size_t>(embeddings.left.rows()) != graph.left_count() ||
      static_cast<std::size_t>(embeddings.right.rows()) != graph.right_count())
    throw SchemaError("embedding rows do not match the graph");
  return Propagator(graph).layer_mean(embeddings, layers);
}

namespace {

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double bpr_loss_and_gradient(const EmbeddingTable& base, const Propagator& propagator, int layers,
                             std::span<const Triplet> batch, double l2_reg,
                             EmbeddingTable* gradient) {
  if (batch.empty()) return 0.0;
  EmbeddingTable propagated;
  const EmbeddingTable* final_emb = &base;
  if (layers > 0) {
    propagated = propagator.layer_mean(base, layers);
    final_emb = &propagated;
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  EmbeddingTable grad_final;
  if (gradient) {
    grad_final.left = RowMatrix::Zero(base.left.rows(), base.left.cols());
    grad_final.right = RowMatrix::Zero(base.right.rows(), base.right.cols());
  }
  double loss = 0.0;
  for (const auto& t : batch) {
    const auto fu = final_emb->left.row(t.user);
    const auto fi = final_emb->right.row(t.positive);
    const auto fj = final_emb->right.row(t.negative);
    const double z = fu.dot(fi) - fu.dot(fj);
    loss -= log_sigmoid(z);
    loss += l2_reg * (base.left.row(t.user).squaredNorm() + base.right.row(t.positive).squaredNorm() +
                      base.right.row(t.negative).squaredNorm());
    if (gradient) {
      const double c = (sigmoid(z) - 1.0) * inv_b;
      grad_final.left.row(t.user) += c * (fi - fj);
      grad_final.right.row(t.positive) += c * fu;
      grad_final.right.row(t.negative) -= c * fu;
    }
  }
  loss *= inv_b;
  if (gradient) {
    *gradient = layers > 0 ? propagator.layer_mean_adjoint(grad_final, layers) : std::move(grad_final);
    const double r = 2.0 * l2_reg * inv_b;
    for (const auto& t : batch) {
      gradient->left.row(t.user) += r * base.left.row(t.user);
      gradient->right.row(t.positive) += r * base.right.row(t.positive);
      gradient->right.row(t.negative) += r * base.right.row(t.negative);
    }
  }
  return loss;
}

EmbeddingTable initial_embeddings(const BipartiteGraph& graph, const TrainConfig& config) {
  if (config.dim < 1) throw ArgumentError("embedding dim must be >= 1");
  Rng rng(derive_seed(config.seed, 0));
  EmbeddingTable e;
  e.left.resize(static_cast<Eigen::Index>(graph.left_count()), config.dim);
  e.right.resize(static_cast<Eigen::Index>(graph.right_count()), config.dim);
  for (Eigen::Index i = 0; i < e.left.size(); ++i) e.left.data()[i] = rng.normal(0.0, config.init_stddev);
  for (Eigen::Index i = 0; i < e.right.size(); ++i) e.right.data()[i] = rng.normal(0.0, config.init_stddev);
  return e;
}

namespace {

class AdamState {
 public:
  explicit AdamState(const EmbeddingTable& shape)
      : m_left(RowMatrix::Zero(shape.left.rows(), shape.left.cols())),
        v_left(m_left),
        m_right(RowMatrix::Zero(shape.right.rows(), shape.right.cols())),
        v_right(m_right) {}

  void step(EmbeddingTable& params, const EmbeddingTable& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    update(params.left, grad.left, m_left, v_left, lr, c1, c2);
    update(params.right, grad.right, m_right, v_right, lr, c1, c2);
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  static void update(RowMatrix& p, const RowMatrix& g, RowMatrix& m, RowMatrix& v, double lr,
                     double c1, double c2) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseAbs2();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  RowMatrix m_left, v_left, m_right, v_right;
  int t_ = 0;
};

}  // namespace

EmbeddingTable train_lightgcn(const BipartiteGraph& graph, const TrainConfig& config,
                              EmbeddingTable* base_out, TrainLog* log_out) {
  if (config.layers < 0) throw ArgumentError("layers must be >= 0");
  if (!(config.learning_rate >= 0.0)) throw ArgumentError("learning_rate must be >= 0");
  if (config.batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  for (NodeId u = 0; u < graph.left_count(); ++u) {
    const auto k = graph.left_degree(u);
    if (k == 0)
      throw ArgumentError("left node " + graph.left_label(u) + " has no train edges");
    if (k == graph.right_count())
      throw ArgumentError("left node " + graph.left_label(u) +
                          " is linked to every right node; no negatives to sample");
  }

  const Propagator propagator(graph);
  EmbeddingTable base = initial_embeddings(graph, config);
  AdamState adam(base);
  EmbeddingTable grad;
  const auto edges = graph.edges();
  std::vector<std::size_t> order(edges.size());
  std::vector<Triplet> batch;
  batch.reserve(config.batch_size);
  TrainLog log;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& e = edges[order[i]];
        NodeId j;
        do {
          j = static_cast<NodeId>(rng.uniform_index(graph.right_count()));
        } while (graph.has_edge(e.left, j));
        batch.push_back({e.left, e.right, j});
      }
      const double loss =
          bpr_loss_and_gradient(base, propagator, config.layers, batch, config.l2_reg, &grad);
      epoch_loss += loss * static_cast<double>(batch.size());
      if (config.optimizer == Optimizer::adam) {
        adam.step(base, grad, config.learning_rate);
      } else {
        base.left -= config.learning_rate * grad.left;
        base.right -= config.learning_rate * grad.right;
      }
    }
    log.epoch_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(1, order.size())));
    if (bplp::log_level() <= LogLevel::debug)
      bplp::log(LogLevel::debug, "epoch " + std::to_string(epoch) + " loss " +
                                     std::to_string(log.epoch_loss.back()));
  }
  base.validate();
  auto out = propagator.layer_mean(base, config.layers);
  if (base_out) *base_out = std::move(base);
  if (log_out) *log_out = std::move(log);
  return out;
}

EmbeddingTable train_bpr(const BipartiteGraph& graph, TrainConfig config, TrainLog* log) {
  config.layers = 0;
  return train_lightgcn(graph, config, nullptr, log);
}

ScoreTable scores_from_embeddings(const EmbeddingTable& e, std::span<const Pair> pairs,
                                  std::string method_name) {
  ScoreTable t;
  t.method_name = std::move(method_name);
  t.pairs.assign(pairs.begin(), pairs.end());
  t.scores.assign(pairs.size(), 0.0);
  for (const auto& p : pairs)
    if (p.left >= e.left.rows() || p.right >= e.right.rows())
      throw SchemaError("pair (" + std::to_string(p.left) + ", " + std::to_string(p.right) +
                        ") outside the embedding table");
  parallel_rows(
      pairs.size(), [] { return 0; },
      [&](std::size_t i, int&) {
        t.scores[i] = e.left.row(pairs[i].left).dot(e.right.row(pairs[i].right));
      });
  return t;
}

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# dim " << table.dim() << " left " << table.left.rows() << " right " << table.right.rows()
      << '\n';
  char buf[32];
  auto dump = [&](const RowMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
        out << (c ? "\t" : "") << buf;
      }
      out << '\n';
    }
  };
  dump(table.left);
  dump(table.right);
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string hash, kd, kl, kr;
  Eigen::Index dim = 0, nl = 0, nr = 0;
  if (!(in >> hash >> kd >> dim >> kl >> nl >> kr >> nr) || hash != "#" || kd != "dim")
    throw ParseError(path.string() + ": bad embedding header", 1);
  EmbeddingTable t;
  t.left.resize(nl, dim);
  t.right.resize(nr, dim);
  for (Eigen::Index i = 0; i < t.left.size(); ++i)
    if (!(in >> t.left.data()[i])) throw ParseError(path.string() + ": truncated", 0);
  for (Eigen::Index i = 0; i < t.right.size(); ++i)
    if (!(in >> t.right.data()[i])) throw ParseError(path.string() + ": truncated", 0);
  return t;
}

}  // namespace bplp
