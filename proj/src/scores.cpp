#include "bplp/scores.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "bplp/error.hpp"
#include "bplp/parallel.hpp"

namespace bplp {

void ScoreTable::validate() const {
  if (pairs.size() != scores.size())
    throw SchemaError("score table '" + method_name + "': pairs and scores differ in length");
  for (double s : scores)
    if (!std::isfinite(s))
      throw SchemaError("score table '" + method_name + "' contains a non-finite score");
  PairList sorted(pairs);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw SchemaError("score table '" + method_name + "' contains a repeated pair");
}

void write_score_table(const ScoreTable& table, const BipartiteGraph& graph,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(table.graph_fingerprint));
  out << "# method: " << table.method_name << '\n'
      << "# params: " << (table.params.empty() ? "{}" : table.params) << '\n'
      << "# seed: " << table.seed << '\n'
      << "# graph_fingerprint: " << buf << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", table.scores[i]);
    out << graph.left_label(table.pairs[i].left) << '\t' << graph.right_label(table.pairs[i].right)
        << '\t' << buf << '\n';
  }
}

ScoreTable read_score_table(const std::filesystem::path& path, const BipartiteGraph& graph) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::unordered_map<std::string, NodeId> left, right;
  for (NodeId u = 0; u < graph.left_count(); ++u) left.emplace(graph.left_label(u), u);
  for (NodeId v = 0; v < graph.right_count(); ++v) right.emplace(graph.right_label(v), v);

  ScoreTable table;
  table.graph_fingerprint = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto key = line.substr(2, colon - 2);
      auto value = line.substr(colon + 2);
      if (key == "method") table.method_name = value;
      else if (key == "params") table.params = value;
      else if (key == "seed") table.seed = std::stoull(value);
      else if (key == "graph_fingerprint") table.graph_fingerprint = std::stoull(value, nullptr, 16);
      continue;
    }
    std::istringstream fields(line);
    std::string l, r, s;
    if (!(std::getline(fields, l, '\t') && std::getline(fields, r, '\t') && std::getline(fields, s)))
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields",
                       line_no);
    auto li = left.find(l);
    auto ri = right.find(r);
    if (li == left.end() || ri == right.end())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown node", line_no);
    table.pairs.push_back({li->second, ri->second});
    table.scores.push_back(std::stod(s));
  }
  return table;
}

PairRows::PairRows(std::size_t left_count, std::span<const Pair> pairs)
    : ptr_(left_count + 1, 0), order_(pairs.size()) {
  for (const auto& p : pairs) {
    if (p.left >= left_count) throw SchemaError("pair left id out of range");
    ++ptr_[p.left + 1];
  }
  std::partial_sum(ptr_.begin(), ptr_.end(), ptr_.begin());
  std::vector<std::size_t> fill(ptr_.begin(), ptr_.end() - 1);
  for (std::size_t i = 0; i < pairs.size(); ++i) order_[fill[pairs[i].left]++] = i;
}

namespace {

void check_right_ids(const BipartiteGraph& graph, std::span<const Pair> pairs) {
  for (const auto& p : pairs)
    if (p.left >= graph.left_count() || p.right >= graph.right_count())
      throw SchemaError("pair (" + std::to_string(p.left) + ", " + std::to_string(p.right) +
                        ") outside the graph");
}

ScoreTable make_table(const std::string& name, const BipartiteGraph& graph,
                      std::span<const Pair> pairs, std::string params) {
  ScoreTable t;
  t.method_name = name;
  t.pairs.assign(pairs.begin(), pairs.end());
  t.scores.assign(pairs.size(), 0.0);
  t.graph_fingerprint = graph.fingerprint();
  t.params = std::move(params);
  return t;
}

std::vector<double> inv_sqrt_degrees(std::span<const std::size_t> offsets, bool normalize) {
  std::vector<double> out(offsets.size() - 1, 1.0);
  if (!normalize) return out;
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    const auto k = offsets[i + 1] - offsets[i];
    out[i] = k == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(k));
  }
  return out;
}

struct RowScratch {
  std::vector<double> left;
  std::vector<double> right;
};

/// Walks of odd length `length` starting at left node x, weighted by
/// intermediate-node factors. Result lands in s.right.
void walk_row(const BipartiteGraph& g, NodeId x, int length, std::span<const double> wl,
              std::span<const double> wr, RowScratch& s) {
  std::fill(s.right.begin(), s.right.end(), 0.0);
  for (NodeId v : g.left_neighbors(x)) s.right[v] += 1.0;
  for (int step = 1; step < length; step += 2) {
    std::fill(s.left.begin(), s.left.end(), 0.0);
    for (NodeId v = 0; v < g.right_count(); ++v) {
      if (s.right[v] == 0.0) continue;
      const double w = s.right[v] * wr[v];
      for (NodeId u : g.right_neighbors(v)) s.left[u] += w;
    }
    std::fill(s.right.begin(), s.right.end(), 0.0);
    for (NodeId u = 0; u < g.left_count(); ++u) {
      if (s.left[u] == 0.0) continue;
      const double w = s.left[u] * wl[u];
      for (NodeId v : g.left_neighbors(u)) s.right[v] += w;
    }
  }
}

ScoreTable walk_scores(const std::string& name, const BipartiteGraph& graph,
                       std::span<const Pair> pairs, int length, bool normalize, double scale,
                       std::string params) {
  check_right_ids(graph, pairs);
  auto table = make_table(name, graph, pairs, std::move(params));
  const auto wl = inv_sqrt_degrees(graph.left_offsets(), normalize);
  const auto wr = inv_sqrt_degrees(graph.right_offsets(), normalize);
  const PairRows rows(graph.left_count(), pairs);
  parallel_rows(
      graph.left_count(),
      [&] { return RowScratch{std::vector<double>(graph.left_count()),
                              std::vector<double>(graph.right_count())}; },
      [&](std::size_t x, RowScratch& s) {
        auto row = rows.row(static_cast<NodeId>(x));
        if (row.empty()) return;
        walk_row(graph, static_cast<NodeId>(x), length, wl, wr, s);
        for (auto i : row) table.scores[i] = scale * s.right[pairs[i].right];
      });
  return table;
}

std::string json_params(const nlohmann::json& j) { return j.dump(); }

}  // namespace

ScoreTable score_path_index(const BipartiteGraph& graph, std::span<const Pair> pairs,
                            const PathIndexParams& params) {
  if (params.length < 1 || params.length % 2 == 0)
    throw ArgumentError("path index length " + std::to_string(params.length) +
                        " unsupported: cross-side walks have odd length");
  const bool normalize = params.normalization == PathNormalization::sqrt_degree;
  return walk_scores("L" + std::to_string(params.length), graph, pairs, params.length, normalize,
                     1.0,
                     json_params({{"length", params.length},
                                  {"normalization", normalize ? "sqrt_degree" : "none"}}));
}

/// One product with the symmetric adjacency over the full node space
/// ([0, nl) left, [nl, nl + nr) right).
static void adjacency_product(const BipartiteGraph& g, std::span<const double> in, std::span<double> out) {
  const std::size_t nl = g.left_count();
  for (NodeId u = 0; u < nl; ++u) {
    double a = 0.0;
    for (NodeId v : g.left_neighbors(u)) a += in[nl + v];
    out[u] = a;
  }
  for (NodeId v = 0; v < g.right_count(); ++v) {
    double a = 0.0;
    for (NodeId u : g.right_neighbors(v)) a += in[u];
    out[nl + v] = a;
  }
}

ScoreTable score_lp(const BipartiteGraph& graph, double epsilon, std::span<const Pair> pairs) {
  if (!(epsilon > 0.0)) throw ArgumentError("LP epsilon must be positive");
  check_right_ids(graph, pairs);
  auto table = make_table("LP", graph, pairs, json_params({{"epsilon", epsilon}}));
  const PairRows rows(graph.left_count(), pairs);
  const std::size_t nl = graph.left_count(), n = graph.node_count();
  struct Scratch {
    std::vector<double> a1, a2, a3;
  };
  parallel_rows(
      nl, [&] { return Scratch{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)}; },
      [&](std::size_t x, Scratch& s) {
        auto row = rows.row(static_cast<NodeId>(x));
        if (row.empty()) return;
        std::fill(s.a1.begin(), s.a1.end(), 0.0);
        for (NodeId v : graph.left_neighbors(static_cast<NodeId>(x))) s.a1[nl + v] = 1.0;
        adjacency_product(graph, s.a1, s.a2);
        adjacency_product(graph, s.a2, s.a3);
        for (auto i : row) {
          const auto y = nl + pairs[i].right;
          if (s.a2[y] != 0.0)
            throw std::logic_error("LP: (A^2)_xy is non-zero for a cross-side pair");
          table.scores[i] = s.a2[y] + epsilon * s.a3[y];
        }
      });
  return table;
}

double spectral_radius(const BipartiteGraph& graph, double tolerance, int max_iterations) {
  if (graph.edge_count() == 0) return 0.0;
  std::vector<double> x(graph.right_count(), 1.0), y(graph.left_count()), z(graph.right_count());
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    for (NodeId u = 0; u < graph.left_count(); ++u) {
      double acc = 0.0;
      for (NodeId v : graph.left_neighbors(u)) acc += x[v];
      y[u] = acc;
    }
    for (NodeId v = 0; v < graph.right_count(); ++v) {
      double acc = 0.0;
      for (NodeId u : graph.right_neighbors(v)) acc += y[u];
      z[v] = acc;
    }
    const double xx = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
    const double xz = std::inner_product(x.begin(), x.end(), z.begin(), 0.0);
    const double next = xz / xx;  // Rayleigh quotient of B^T B
    const double norm = std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] / norm;
    if (std::abs(next - lambda) <= tolerance * std::max(1.0, next)) {
      lambda = next;
      return std::sqrt(lambda);
    }
    lambda = next;
  }
  throw ConvergenceError("spectral radius power iteration did not converge in " +
                         std::to_string(max_iterations) + " iterations");
}

double check_katz_alpha(const BipartiteGraph& graph, double alpha) {
  if (!(alpha > 0.0)) throw ArgumentError("Katz alpha must be positive");
  const double rho = spectral_radius(graph);
  if (alpha * rho >= 1.0) {
    const double admissible = 1.0 / rho;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "Katz series diverges: alpha=%g, spectral radius=%.6g, alpha must be < %.6g",
                  alpha, rho, admissible);
    throw DivergenceError(buf, admissible);
  }
  return rho;
}

ScoreTable score_katz(const BipartiteGraph& graph, const KatzParams& params,
                      std::span<const Pair> pairs) {
  if (params.max_length < 1) throw ArgumentError("Katz max_length must be >= 1");
  check_right_ids(graph, pairs);
  check_katz_alpha(graph, params.alpha);
  auto table = make_table("Katz", graph, pairs,
                          json_params({{"alpha", params.alpha},
                                       {"max_length", params.max_length},
                                       {"tolerance", params.tolerance}}));
  const PairRows rows(graph.left_count(), pairs);
  const std::size_t nl = graph.left_count(), nr = graph.right_count();

  struct Scratch {
    std::vector<double> term, next, acc;
  };
  parallel_rows(
      nl,
      [&] {
        const auto n = nl + nr;
        return Scratch{std::vector<double>(n), std::vector<double>(n), std::vector<double>(nr)};
      },
      [&](std::size_t x, Scratch& s) {
        auto row = rows.row(static_cast<NodeId>(x));
        if (row.empty()) return;
        // term holds alpha^l (A^l e_x) over all nodes: [0, nl) left, [nl, nl+nr) right
        std::fill(s.term.begin(), s.term.end(), 0.0);
        std::fill(s.acc.begin(), s.acc.end(), 0.0);
        s.term[x] = 1.0;
        for (int l = 1; l <= params.max_length; ++l) {
          for (NodeId u = 0; u < nl; ++u) {
            double a = 0.0;
            for (NodeId v : graph.left_neighbors(u)) a += s.term[nl + v];
            s.next[u] = params.alpha * a;
          }
          for (NodeId v = 0; v < nr; ++v) {
            double a = 0.0;
            for (NodeId u : graph.right_neighbors(v)) a += s.term[u];
            s.next[nl + v] = params.alpha * a;
          }
          s.term.swap(s.next);
          // odd l reaches the right side only; even l the left side only
          const bool odd = l % 2 == 1;
          const auto active_begin = odd ? s.term.begin() + static_cast<std::ptrdiff_t>(nl)
                                        : s.term.begin();
          const auto active_end = odd ? s.term.end()
                                      : s.term.begin() + static_cast<std::ptrdiff_t>(nl);
          const auto idle_begin = odd ? s.term.begin() : active_end;
          const auto idle_end = odd ? active_begin : s.term.end();
          if (std::any_of(idle_begin, idle_end, [](double t) { return t != 0.0; }))
            throw std::logic_error("Katz: walk parity violated (graph is not bipartite)");
          double peak = 0.0;
          for (auto it = active_begin; it != active_end; ++it) peak = std::max(peak, std::abs(*it));
          if (odd)
            for (std::size_t v = 0; v < nr; ++v) s.acc[v] += s.term[nl + v];
          if (peak < params.tolerance) break;
        }
        for (auto i : row) table.scores[i] = s.acc[pairs[i].right];
      });
  return table;
}

ScoreTable score_pa(const BipartiteGraph& graph, std::span<const Pair> pairs) {
  check_right_ids(graph, pairs);
  auto table = make_table("PA", graph, pairs, "{}");
  for (std::size_t i = 0; i < pairs.size(); ++i)
    table.scores[i] = static_cast<double>(graph.left_degree(pairs[i].left)) *
                      static_cast<double>(graph.right_degree(pairs[i].right));
  return table;
}

ScoreTable score_dist(const BipartiteGraph& graph, std::span<const Pair> pairs) {
  check_right_ids(graph, pairs);
  auto table = make_table("Dist", graph, pairs, "{}");
  const PairRows rows(graph.left_count(), pairs);
  const std::size_t nl = graph.left_count(), nr = graph.right_count();
  struct Scratch {
    std::vector<std::uint32_t> dist;
    std::vector<std::uint32_t> queue;
  };
  constexpr auto kUnseen = ~std::uint32_t{0};
  parallel_rows(
      nl, [&] { return Scratch{std::vector<std::uint32_t>(nl + nr), {}}; },
      [&](std::size_t x, Scratch& s) {
        auto row = rows.row(static_cast<NodeId>(x));
        if (row.empty()) return;
        std::fill(s.dist.begin(), s.dist.end(), kUnseen);
        s.queue.clear();
        s.queue.push_back(static_cast<std::uint32_t>(x));
        s.dist[x] = 0;
        for (std::size_t head = 0; head < s.queue.size(); ++head) {
          const auto node = s.queue[head];
          const auto d = s.dist[node] + 1;
          auto visit = [&](std::uint32_t next) {
            if (s.dist[next] == kUnseen) {
              s.dist[next] = d;
              s.queue.push_back(next);
            }
          };
          if (node < nl) {
            for (NodeId v : graph.left_neighbors(node)) visit(static_cast<std::uint32_t>(nl + v));
          } else {
            for (NodeId u : graph.right_neighbors(static_cast<NodeId>(node - nl))) visit(u);
          }
        }
        for (auto i : row) {
          const auto d = s.dist[nl + pairs[i].right];
          table.scores[i] = d == kUnseen ? 0.0 : 1.0 / static_cast<double>(d);
        }
      });
  return table;
}

PairList rank_and_select(const ScoreTable& scores, std::size_t n) {
  if (n > scores.size())
    throw ArgumentError("cannot select " + std::to_string(n) + " pairs from " +
                        std::to_string(scores.size()));
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores.scores[a] != scores.scores[b]) return scores.scores[a] > scores.scores[b];
    return scores.pairs[a] < scores.pairs[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    better);
  PairList out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(scores.pairs[order[i]]);
  return out;
}

}  // namespace bplp
