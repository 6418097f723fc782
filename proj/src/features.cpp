#include "bplp/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "bplp/error.hpp"
#include "bplp/parallel.hpp"
#include "bplp/rng.hpp"
#include "bplp/scores.hpp"

namespace bplp {

const std::array<std::string, kFeatureWidth>& feature_names() {
  static const std::array<std::string, kFeatureWidth> names = {
      "left_pagerank",   "left_degree",      "left_closeness",  "left_betweenness",
      "left_eigenvector", "left_katz",       "right_pagerank",  "right_degree",
      "right_closeness", "right_betweenness", "right_eigenvector", "right_katz",
      "pa"};
  return names;
}

namespace {

/// Neighbors of node i in the unified numbering.
template <class F>
void for_each_neighbor(const BipartiteGraph& g, std::size_t i, F&& f) {
  const auto nl = g.left_count();
  if (i < nl) {
    for (NodeId v : g.left_neighbors(static_cast<NodeId>(i))) f(nl + v);
  } else {
    for (NodeId u : g.right_neighbors(static_cast<NodeId>(i - nl))) f(std::size_t{u});
  }
}

std::size_t degree_of(const BipartiteGraph& g, std::size_t i) {
  const auto nl = g.left_count();
  return i < nl ? g.left_degree(static_cast<NodeId>(i))
                : g.right_degree(static_cast<NodeId>(i - nl));
}

void require_nodes(const BipartiteGraph& g) {
  if (g.node_count() == 0) throw EmptyGraphError("node measures need a non-empty graph");
}

/// BFS from `source`; fills dist (UINT32_MAX = unseen) and the visit order.
void bfs(const BipartiteGraph& g, std::size_t source, std::vector<std::uint32_t>& dist,
         std::vector<std::size_t>& order) {
  std::fill(dist.begin(), dist.end(), ~std::uint32_t{0});
  order.clear();
  dist[source] = 0;
  order.push_back(source);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const auto node = order[head];
    const auto d = dist[node] + 1;
    for_each_neighbor(g, node, [&](std::size_t next) {
      if (dist[next] == ~std::uint32_t{0}) {
        dist[next] = d;
        order.push_back(next);
      }
    });
  }
}

}  // namespace

std::vector<double> pagerank(const BipartiteGraph& graph, double damping, double tolerance,
                             int max_iterations) {
  require_nodes(graph);
  const auto n = graph.node_count();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, inv_n), next(n), share(n);
  for (int it = 0; it < max_iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = degree_of(graph, i);
      if (k == 0) {
        dangling += rank[i];
        share[i] = 0.0;
      } else {
        share[i] = rank[i] / static_cast<double>(k);
      }
    }
    const double base = (1.0 - damping) * inv_n + damping * dangling * inv_n;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for_each_neighbor(graph, i, [&](std::size_t j) { acc += share[j]; });
      next[i] = base + damping * acc;
      change += std::abs(next[i] - rank[i]);
    }
    rank.swap(next);
    if (change < tolerance) {
      const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
      for (auto& r : rank) r /= total;
      return rank;
    }
  }
  throw ConvergenceError("PageRank did not converge in " + std::to_string(max_iterations) +
                         " iterations");
}

std::vector<double> degree_centrality(const BipartiteGraph& graph) {
  require_nodes(graph);
  const auto n = graph.node_count();
  std::vector<double> out(n, 0.0);
  if (n == 1) return out;
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<double>(degree_of(graph, i)) / static_cast<double>(n - 1);
  return out;
}

std::vector<double> closeness_centrality(const BipartiteGraph& graph) {
  require_nodes(graph);
  const auto n = graph.node_count();
  std::vector<double> out(n, 0.0);
  if (n == 1) return out;
  struct Scratch {
    std::vector<std::uint32_t> dist;
    std::vector<std::size_t> order;
  };
  parallel_rows(
      n, [&] { return Scratch{std::vector<std::uint32_t>(n), {}}; },
      [&](std::size_t s, Scratch& sc) {
        bfs(graph, s, sc.dist, sc.order);
        double total = 0.0;
        for (auto node : sc.order) total += sc.dist[node];
        const auto reached = static_cast<double>(sc.order.size() - 1);
        if (total > 0.0) out[s] = (reached / total) * (reached / static_cast<double>(n - 1));
      });
  return out;
}

std::vector<double> betweenness_centrality(const BipartiteGraph& graph) {
  require_nodes(graph);
  const auto n = graph.node_count();
  // Sources are processed in fixed-size chunks whose partial sums are added
  // in chunk order, so the result does not depend on the worker count.
  constexpr std::size_t kChunk = 64;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(n_chunks);
  struct Scratch {
    std::vector<std::uint32_t> dist;
    std::vector<std::size_t> order;
    std::vector<double> sigma, delta;
  };
  parallel_rows(
      n_chunks,
      [&] {
        return Scratch{std::vector<std::uint32_t>(n), {}, std::vector<double>(n),
                       std::vector<double>(n)};
      },
      [&](std::size_t chunk, Scratch& sc) {
        std::vector<double> acc(n, 0.0);
        const auto end = std::min(n, (chunk + 1) * kChunk);
        for (std::size_t s = chunk * kChunk; s < end; ++s) {
          bfs(graph, s, sc.dist, sc.order);
          for (auto node : sc.order) {
            sc.sigma[node] = 0.0;
            sc.delta[node] = 0.0;
          }
          sc.sigma[s] = 1.0;
          for (auto node : sc.order) {
            for_each_neighbor(graph, node, [&](std::size_t next) {
              if (sc.dist[next] == sc.dist[node] + 1) sc.sigma[next] += sc.sigma[node];
            });
          }
          for (auto it = sc.order.rbegin(); it != sc.order.rend(); ++it) {
            const auto w = *it;
            for_each_neighbor(graph, w, [&](std::size_t pred) {
              if (sc.dist[pred] + 1 == sc.dist[w])
                sc.delta[pred] += sc.sigma[pred] / sc.sigma[w] * (1.0 + sc.delta[w]);
            });
            if (w != s) acc[w] += sc.delta[w];
          }
        }
        partial[chunk] = std::move(acc);
      });
  std::vector<double> out(n, 0.0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < n; ++i) out[i] += p[i];
  for (auto& b : out) b *= 0.5;  // each unordered pair was counted from both ends
  return out;
}

std::vector<double> eigenvector_centrality(const BipartiteGraph& graph, double tolerance,
                                           int max_iterations, double* eigenvalue) {
  require_nodes(graph);
  const auto n = graph.node_count();
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), next(n);
  // Iterate with A + I: a bipartite A has -rho alongside rho, which would
  // make plain power iteration oscillate.
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = x[i];
      for_each_neighbor(graph, i, [&](std::size_t j) { acc += x[j]; });
      next[i] = acc;
    }
    const double norm = std::sqrt(std::inner_product(next.begin(), next.end(), next.begin(), 0.0));
    if (norm == 0.0) throw ConvergenceError("eigenvector centrality collapsed to zero");
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= norm;
      change = std::max(change, std::abs(next[i] - x[i]));
    }
    x.swap(next);
    if (change < tolerance) {
      const auto peak = std::max_element(x.begin(), x.end(), [](double a, double b) {
        return std::abs(a) < std::abs(b);
      });
      if (*peak < 0.0)
        for (auto& v : x) v = -v;
      if (eigenvalue) {
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for_each_neighbor(graph, i, [&](std::size_t j) { acc += x[j]; });
          rq += x[i] * acc;
        }
        *eigenvalue = rq;
      }
      return x;
    }
  }
  throw ConvergenceError("eigenvector centrality did not converge in " +
                         std::to_string(max_iterations) + " iterations");
}

std::vector<double> katz_centrality(const BipartiteGraph& graph, double alpha, double beta,
                                    double tolerance, int max_iterations) {
  require_nodes(graph);
  check_katz_alpha(graph, alpha);
  const auto n = graph.node_count();
  std::vector<double> x(n, 0.0), next(n);
  for (int it = 0; it < max_iterations; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for_each_neighbor(graph, i, [&](std::size_t j) { acc += x[j]; });
      next[i] = alpha * acc + beta;
      change = std::max(change, std::abs(next[i] - x[i]));
    }
    x.swap(next);
    if (change < tolerance) {
      const double norm = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
      if (norm > 0.0)
        for (auto& v : x) v /= norm;
      return x;
    }
  }
  throw ConvergenceError("Katz centrality did not converge in " + std::to_string(max_iterations) +
                         " iterations");
}

NodeMeasures compute_node_measures(const BipartiteGraph& graph, const MeasureConfig& config) {
  NodeMeasures m;
  m.pagerank = pagerank(graph, config.pagerank_damping, config.pagerank_tolerance,
                        config.max_iterations);
  m.degree_centrality = degree_centrality(graph);
  m.closeness = closeness_centrality(graph);
  m.betweenness = betweenness_centrality(graph);
  m.eigenvector_centrality = eigenvector_centrality(graph, config.eigenvector_tolerance,
                                                    config.max_iterations, &m.eigenvalue);
  m.katz_centrality = katz_centrality(graph, config.katz_alpha, config.katz_beta,
                                      config.katz_tolerance, config.max_iterations);
  return m;
}

PairList negative_sample(const BipartiteGraph& graph, std::size_t n, std::uint64_t seed) {
  const std::size_t total = graph.left_count() * graph.right_count();
  const std::size_t available = total - graph.edge_count();
  if (n > available)
    throw CapacityError("requested " + std::to_string(n) + " negative pairs but only " +
                        std::to_string(available) + " non-edges exist");
  PairList out;
  if (n == 0) return out;
  out.reserve(n);
  Rng rng(seed);

  auto enumerate = [&] {
    PairList all = candidate_pairs(graph);
    for (std::size_t i = 0; i < n; ++i)
      std::swap(all[i], all[i + rng.uniform_index(all.size() - i)]);
    all.resize(n);
    return all;
  };
  // dense request: rejection would mostly hit duplicates
  if (available < 2 * n) return enumerate();

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2 * n);
  const std::size_t cap = 20 * n + 1000;
  for (std::size_t attempt = 0; attempt < cap && out.size() < n; ++attempt) {
    const auto u = static_cast<NodeId>(rng.uniform_index(graph.left_count()));
    const auto v = static_cast<NodeId>(rng.uniform_index(graph.right_count()));
    if (graph.has_edge(u, v)) continue;
    if (!seen.insert((std::uint64_t{u} << 32) | v).second) continue;
    out.push_back({u, v});
  }
  if (out.size() < n) return enumerate();
  return out;
}

PairFeatures pair_features(const BipartiteGraph& graph, const NodeMeasures& m,
                           std::span<const Pair> pairs) {
  const auto nl = graph.left_count();
  if (m.pagerank.size() != graph.node_count())
    throw SchemaError("node measures were computed on a different graph");
  PairFeatures out;
  out.pairs.assign(pairs.begin(), pairs.end());
  out.values.resize(pairs.size() * kFeatureWidth);
  const std::array<const std::vector<double>*, kMeasureCount> cols = {
      &m.pagerank, &m.degree_centrality, &m.closeness, &m.betweenness,
      &m.eigenvector_centrality, &m.katz_centrality};
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto& p = pairs[r];
    if (p.left >= nl || p.right >= graph.right_count())
      throw SchemaError("pair outside the graph");
    double* row = out.values.data() + r * kFeatureWidth;
    for (std::size_t c = 0; c < kMeasureCount; ++c) {
      row[c] = (*cols[c])[p.left];
      row[kMeasureCount + c] = (*cols[c])[nl + p.right];
    }
    row[2 * kMeasureCount] = static_cast<double>(graph.left_degree(p.left)) *
                             static_cast<double>(graph.right_degree(p.right));
  }
  return out;
}

PairFeatures build_pair_dataset(const BipartiteGraph& graph, const NodeMeasures& measures,
                                std::uint64_t seed) {
  const auto positives = graph.edges();
  const auto negatives = negative_sample(graph, positives.size(), derive_seed(seed, 1));
  struct Row {
    Pair pair;
    int label;
  };
  std::vector<Row> rows;
  rows.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) rows.push_back({p, 1});
  for (const auto& p : negatives) rows.push_back({p, 0});
  Rng rng(derive_seed(seed, 2));
  shuffle(rows.begin(), rows.end(), rng);

  PairList pairs;
  pairs.reserve(rows.size());
  for (const auto& r : rows) pairs.push_back(r.pair);
  auto out = pair_features(graph, measures, pairs);
  out.labels.reserve(rows.size());
  for (const auto& r : rows) out.labels.push_back(r.label);
  return out;
}

void write_pair_features(const PairFeatures& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "left,right";
  for (const auto& name : feature_names()) out << ',' << name;
  out << ",label\n";
  char buf[32];
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << data.pairs[r].left << ',' << data.pairs[r].right;
    for (double v : data.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << ',' << (data.labels.empty() ? -1 : data.labels[r]) << '\n';
  }
}

}  // namespace bplp
