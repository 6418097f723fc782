#include "bplp/reference.hpp"

#include <cmath>
#include <limits>
#include <queue>

namespace bplp::reference {

namespace {

std::vector<std::vector<std::size_t>> adjacency_lists(const BipartiteGraph& g) {
  const std::size_t nl = g.left_count();
  std::vector<std::vector<std::size_t>> adj(g.node_count());
  for (const auto& e : g.edges()) {
    adj[e.left].push_back(nl + e.right);
    adj[nl + e.right].push_back(e.left);
  }
  return adj;
}

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

std::vector<std::size_t> bfs_distances(const std::vector<std::vector<std::size_t>>& adj, std::size_t s) {
  std::vector<std::size_t> d(adj.size(), kUnreached);
  std::queue<std::size_t> q;
  d[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const auto x = q.front();
    q.pop();
    for (auto y : adj[x])
      if (d[y] == kUnreached) {
        d[y] = d[x] + 1;
        q.push(y);
      }
  }
  return d;
}

}  // namespace

std::vector<double> path_index(const BipartiteGraph& g, std::span<const Pair> pairs, int length) {
  std::vector<double> inv_l(g.left_count()), inv_r(g.right_count());
  for (NodeId u = 0; u < g.left_count(); ++u)
    inv_l[u] = g.left_degree(u) ? 1.0 / std::sqrt(static_cast<double>(g.left_degree(u))) : 0.0;
  for (NodeId v = 0; v < g.right_count(); ++v)
    inv_r[v] = g.right_degree(v) ? 1.0 / std::sqrt(static_cast<double>(g.right_degree(v))) : 0.0;

  std::vector<double> out(pairs.size());
  std::vector<double> on_right(g.right_count()), on_left(g.left_count());
  NodeId current = std::numeric_limits<NodeId>::max();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const NodeId x = pairs[i].left;
    if (x != current) {
      current = x;
      for (NodeId v = 0; v < g.right_count(); ++v) on_right[v] = g.has_edge(x, v) ? 1.0 : 0.0;
      for (int step = 1; step < length; step += 2) {
        for (NodeId u = 0; u < g.left_count(); ++u) {
          double a = 0.0;
          for (NodeId v : g.left_neighbors(u)) a += on_right[v] * inv_r[v];
          on_left[u] = a;
        }
        for (NodeId v = 0; v < g.right_count(); ++v) {
          double a = 0.0;
          for (NodeId u : g.right_neighbors(v)) a += on_left[u] * inv_l[u];
          on_right[v] = a;
        }
      }
    }
    out[i] = on_right[pairs[i].right];
  }
  return out;
}

std::vector<double> katz(const BipartiteGraph& g, double alpha, int max_length,
                         std::span<const Pair> pairs) {
  const auto adj = adjacency_lists(g);
  const std::size_t n = g.node_count(), nl = g.left_count();
  std::vector<double> out(pairs.size());
  std::vector<double> walk(n), next(n), total(n);
  NodeId current = std::numeric_limits<NodeId>::max();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const NodeId x = pairs[i].left;
    if (x != current) {
      current = x;
      std::fill(walk.begin(), walk.end(), 0.0);
      std::fill(total.begin(), total.end(), 0.0);
      walk[x] = 1.0;
      for (int l = 1; l <= max_length; ++l) {
        for (std::size_t a = 0; a < n; ++a) {
          double s = 0.0;
          for (auto b : adj[a]) s += walk[b];
          next[a] = alpha * s;
        }
        std::swap(walk, next);
        for (std::size_t a = 0; a < n; ++a) total[a] += walk[a];
      }
    }
    out[i] = total[nl + pairs[i].right];
  }
  return out;
}

std::vector<double> dist(const BipartiteGraph& g, std::span<const Pair> pairs) {
  const auto adj = adjacency_lists(g);
  std::vector<double> out(pairs.size());
  std::vector<std::size_t> d;
  NodeId current = std::numeric_limits<NodeId>::max();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].left != current) {
      current = pairs[i].left;
      d = bfs_distances(adj, current);
    }
    const auto dv = d[g.left_count() + pairs[i].right];
    out[i] = dv == kUnreached ? 0.0 : 1.0 / static_cast<double>(dv);
  }
  return out;
}

std::vector<double> closeness(const BipartiteGraph& g) {
  const auto adj = adjacency_lists(g);
  const std::size_t n = adj.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto d = bfs_distances(adj, s);
    double total = 0.0, reached = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      if (t != s && d[t] != kUnreached) {
        total += static_cast<double>(d[t]);
        reached += 1.0;
      }
    if (total > 0.0) out[s] = (reached / total) * (reached / static_cast<double>(n - 1));
  }
  return out;
}

std::vector<double> betweenness(const BipartiteGraph& g) {
  const auto adj = adjacency_lists(g);
  const std::size_t n = adj.size();
  std::vector<double> out(n, 0.0), sigma(n), delta(n);
  std::vector<std::size_t> d(n);
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(d.begin(), d.end(), kUnreached);
    for (auto& p : preds) p.clear();
    stack.clear();
    sigma[s] = 1.0;
    d[s] = 0;
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      stack.push_back(v);
      for (auto w : adj[v]) {
        if (d[w] == kUnreached) {
          d[w] = d[v] + 1;
          q.push(w);
        }
        if (d[w] == d[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    while (!stack.empty()) {
      const auto w = stack.back();
      stack.pop_back();
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) out[w] += delta[w];
    }
  }
  for (auto& b : out) b /= 2.0;
  return out;
}

EmbeddingTable propagate(const EmbeddingTable& e, const BipartiteGraph& g, int layers) {
  const auto d = e.dim();
  EmbeddingTable acc = e, cur = e;
  for (int l = 0; l < layers; ++l) {
    EmbeddingTable next;
    next.left = RowMatrix::Zero(e.left.rows(), d);
    next.right = RowMatrix::Zero(e.right.rows(), d);
    for (const auto& edge : g.edges()) {
      const double w = 1.0 / std::sqrt(static_cast<double>(g.left_degree(edge.left)) *
                                        static_cast<double>(g.right_degree(edge.right)));
      for (Eigen::Index k = 0; k < d; ++k) {
        next.left(edge.left, k) += w * cur.right(edge.right, k);
        next.right(edge.right, k) += w * cur.left(edge.left, k);
      }
    }
    acc.left += next.left;
    acc.right += next.right;
    cur = std::move(next);
  }
  acc.left /= static_cast<double>(layers + 1);
  acc.right /= static_cast<double>(layers + 1);
  return acc;
}

}  // namespace bplp::reference
