#include "bplp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "bplp/error.hpp"
#include "bplp/hash.hpp"
#include "bplp/rng.hpp"

namespace bplp {

EdgeFormat parse_edge_format(const std::string& name) {
  if (name == "tsv_pair" || name == "tsv") return EdgeFormat::tsv_pair;
  if (name == "movielens_u_data" || name == "movielens") return EdgeFormat::movielens_u_data;
  throw ArgumentError("unknown edge-list format '" + name +
                      "' (expected tsv_pair or movielens_u_data)");
}

std::string to_string(EdgeFormat format) {
  return format == EdgeFormat::tsv_pair ? "tsv_pair" : "movielens_u_data";
}

namespace {

void build_csr(std::size_t rows, std::span<const Pair> edges, bool by_left,
               std::vector<std::size_t>& ptr, std::vector<NodeId>& idx) {
  ptr.assign(rows + 1, 0);
  for (const auto& e : edges) ++ptr[(by_left ? e.left : e.right) + 1];
  for (std::size_t i = 0; i < rows; ++i) ptr[i + 1] += ptr[i];
  idx.resize(edges.size());
  std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
  // edges are sorted by (left, right), so both orientations come out sorted
  for (const auto& e : edges) {
    if (by_left)
      idx[fill[e.left]++] = e.right;
    else
      idx[fill[e.right]++] = e.left;
  }
}

}  // namespace

BipartiteGraph BipartiteGraph::from_edges(std::size_t left_count, std::size_t right_count,
                                          std::vector<Pair> edges) {
  for (const auto& e : edges) {
    if (e.left >= left_count || e.right >= right_count) {
      throw ArgumentError("edge (" + std::to_string(e.left) + ", " +
                          std::to_string(e.right) + ") out of range for " +
                          std::to_string(left_count) + "x" + std::to_string(right_count));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  BipartiteGraph g;
  g.left_count_ = left_count;
  g.right_count_ = right_count;
  g.edges_ = std::move(edges);
  build_csr(left_count, g.edges_, true, g.left_ptr_, g.left_idx_);
  build_csr(right_count, g.edges_, false, g.right_ptr_, g.right_idx_);
  return g;
}

bool BipartiteGraph::has_edge(NodeId u, NodeId v) const noexcept {
  if (u >= left_count_ || v >= right_count_) return false;
  auto nb = left_neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

void BipartiteGraph::set_labels(std::vector<std::string> left, std::vector<std::string> right) {
  if ((!left.empty() && left.size() != left_count_) ||
      (!right.empty() && right.size() != right_count_)) {
    throw ArgumentError("label table size does not match node count");
  }
  left_labels_ = std::move(left);
  right_labels_ = std::move(right);
}

std::string BipartiteGraph::left_label(NodeId u) const {
  return left_labels_.empty() ? std::to_string(u) : left_labels_[u];
}

std::string BipartiteGraph::right_label(NodeId v) const {
  return right_labels_.empty() ? std::to_string(v) : right_labels_[v];
}

std::uint64_t BipartiteGraph::fingerprint() const noexcept {
  Fnv1a h;
  h.add(static_cast<std::uint64_t>(left_count_));
  h.add(static_cast<std::uint64_t>(right_count_));
  for (const auto& e : edges_) {
    h.add(e.left);
    h.add(e.right);
  }
  return h.digest();
}

BipartiteGraph BipartiteGraph::with_edges(std::vector<Pair> edges) const {
  auto g = from_edges(left_count_, right_count_, std::move(edges));
  g.left_labels_ = left_labels_;
  g.right_labels_ = right_labels_;
  return g;
}

// ---------------------------------------------------------------------------
// ingestion

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class Interner {
 public:
  NodeId id(std::string_view key) {
    auto [it, inserted] = index_.try_emplace(std::string(key), static_cast<NodeId>(labels_.size()));
    if (inserted) labels_.emplace_back(key);
    return it->second;
  }
  std::size_t size() const { return labels_.size(); }
  std::vector<std::string> take() { return std::move(labels_); }

 private:
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::string> labels_;
};

}  // namespace

BipartiteGraph parse_edge_list(std::istream& in, EdgeFormat format, const std::string& source) {
  Interner left, right;
  std::vector<Pair> edges;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t expected = format == EdgeFormat::tsv_pair ? 2 : 4;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    if (fields.size() != expected) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": expected " << expected << " fields for "
          << to_string(format) << ", got " << fields.size();
      throw ParseError(msg.str(), line_no);
    }
    edges.push_back({left.id(fields[0]), right.id(fields[1])});
  }
  if (edges.empty()) throw EmptyGraphError(source + ": no edges");
  const auto nl = left.size(), nr = right.size();
  auto g = BipartiteGraph::from_edges(nl, nr, std::move(edges));
  g.set_labels(left.take(), right.take());
  return g;
}

BipartiteGraph load_edge_list(const std::filesystem::path& path, EdgeFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return parse_edge_list(in, format, path.string());
}

void write_edge_list(const BipartiteGraph& graph, std::span<const Pair> edges,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& e : edges)
    out << graph.left_label(e.left) << '\t' << graph.right_label(e.right) << '\n';
}

void write_edge_list(const BipartiteGraph& graph, const std::filesystem::path& path) {
  write_edge_list(graph, graph.edges(), path);
}

// ---------------------------------------------------------------------------
// statistics and transformations

double density(const BipartiteGraph& graph) {
  if (graph.left_count() == 0 || graph.right_count() == 0)
    throw EmptyGraphError("density undefined: a side of the graph is empty");
  return static_cast<double>(graph.edge_count()) /
         (static_cast<double>(graph.left_count()) * static_cast<double>(graph.right_count()));
}

double mean_degree_all(const BipartiteGraph& graph) {
  if (graph.node_count() == 0) throw EmptyGraphError("mean degree of an empty graph");
  return 2.0 * static_cast<double>(graph.edge_count()) / static_cast<double>(graph.node_count());
}

double mean_degree_left(const BipartiteGraph& graph) {
  if (graph.left_count() == 0) throw EmptyGraphError("mean degree with no left nodes");
  return static_cast<double>(graph.edge_count()) / static_cast<double>(graph.left_count());
}

BipartiteGraph min_degree_filter(const BipartiteGraph& graph, std::size_t min_left_degree) {
  constexpr NodeId kDropped = ~NodeId{0};
  std::vector<NodeId> left_map(graph.left_count(), kDropped);
  std::vector<std::string> left_labels;
  NodeId next = 0;
  for (NodeId u = 0; u < graph.left_count(); ++u) {
    if (graph.left_degree(u) >= min_left_degree) {
      left_map[u] = next++;
      if (!graph.left_labels().empty()) left_labels.push_back(graph.left_labels()[u]);
    }
  }
  if (next == 0) throw EmptyGraphError("degree filter removed every left node");

  std::vector<NodeId> right_map(graph.right_count(), kDropped);
  // only nodes isolated by the filter go; already-isolated ones stay
  for (NodeId v = 0; v < graph.right_count(); ++v)
    if (graph.right_degree(v) == 0) right_map[v] = 0;
  for (const auto& e : graph.edges())
    if (left_map[e.left] != kDropped) right_map[e.right] = 0;
  std::vector<std::string> right_labels;
  NodeId next_right = 0;
  for (NodeId v = 0; v < graph.right_count(); ++v) {
    if (right_map[v] != kDropped) {
      right_map[v] = next_right++;
      if (!graph.right_labels().empty()) right_labels.push_back(graph.right_labels()[v]);
    }
  }

  std::vector<Pair> edges;
  edges.reserve(graph.edge_count());
  for (const auto& e : graph.edges())
    if (left_map[e.left] != kDropped) edges.push_back({left_map[e.left], right_map[e.right]});
  auto out = BipartiteGraph::from_edges(next, next_right, std::move(edges));
  out.set_labels(std::move(left_labels), std::move(right_labels));
  return out;
}

std::size_t per_node_test_count(std::size_t degree, double test_fraction) {
  if (degree < 2) return 0;
  const auto rounded =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(degree)));
  return std::clamp<std::size_t>(rounded, 1, degree - 1);
}

EdgeSplit split_per_left_node(const BipartiteGraph& graph, double test_fraction,
                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ArgumentError("test_fraction must lie in (0, 1)");
  if (graph.edge_count() == 0) throw EmptyGraphError("cannot split an empty graph");

  EdgeSplit split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  split.train_edges.reserve(graph.edge_count());
  Rng rng(seed);
  std::vector<NodeId> nb;
  for (NodeId u = 0; u < graph.left_count(); ++u) {
    const auto k = graph.left_degree(u);
    if (k < 2) {
      throw SplitError("left node " + graph.left_label(u) + " (index " + std::to_string(u) +
                       ") has degree " + std::to_string(k) +
                       "; per-node split needs degree >= 2");
    }
    const auto n_test = per_node_test_count(k, test_fraction);
    auto span = graph.left_neighbors(u);
    nb.assign(span.begin(), span.end());
    // partial Fisher-Yates: the first n_test slots become the test sample
    for (std::size_t i = 0; i < n_test; ++i) {
      const auto j = i + rng.uniform_index(k - i);
      std::swap(nb[i], nb[j]);
    }
    std::sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::sort(nb.begin() + static_cast<std::ptrdiff_t>(n_test), nb.end());
    for (std::size_t i = 0; i < k; ++i)
      (i < n_test ? split.test_edges : split.train_edges).push_back({u, nb[i]});
  }
  return split;
}

BipartiteGraph train_graph(const BipartiteGraph& graph, const EdgeSplit& split) {
  return graph.with_edges(split.train_edges);
}

PairList candidate_pairs(const BipartiteGraph& train) {
  PairList out;
  out.reserve(train.left_count() * train.right_count() - train.edge_count());
  for (NodeId u = 0; u < train.left_count(); ++u) {
    auto nb = train.left_neighbors(u);
    auto it = nb.begin();
    for (NodeId v = 0; v < train.right_count(); ++v) {
      if (it != nb.end() && *it == v) {
        ++it;
        continue;
      }
      out.push_back({u, v});
    }
  }
  return out;
}

PairList candidate_pairs(const BipartiteGraph& graph, const EdgeSplit& split) {
  return candidate_pairs(train_graph(graph, split));
}

void write_split(const BipartiteGraph& graph, const EdgeSplit& split,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edge_list(graph, split.train_edges, dir / "train.tsv");
  write_edge_list(graph, split.test_edges, dir / "test.tsv");
  nlohmann::json meta = {{"seed", split.seed},
                         {"test_fraction", split.test_fraction},
                         {"graph_fingerprint", graph.fingerprint()},
                         {"n_train", split.train_edges.size()},
                         {"n_test", split.test_edges.size()}};
  std::ofstream(dir / "split.json") << meta.dump(2) << '\n';
}

namespace {

std::vector<Pair> read_edges_against(const BipartiteGraph& graph,
                                     const std::filesystem::path& path) {
  std::unordered_map<std::string, NodeId> left, right;
  for (NodeId u = 0; u < graph.left_count(); ++u) left.emplace(graph.left_label(u), u);
  for (NodeId v = 0; v < graph.right_count(); ++v) right.emplace(graph.right_label(v), v);
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<Pair> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = split_fields(line);
    if (f.empty() || f.front().front() == '#') continue;
    if (f.size() != 2) throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                            ": expected 2 fields", line_no);
    auto l = left.find(std::string(f[0]));
    auto r = right.find(std::string(f[1]));
    if (l == left.end() || r == right.end())
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": node not present in the source graph", line_no);
    edges.push_back({l->second, r->second});
  }
  return edges;
}

}  // namespace

EdgeSplit read_split(const BipartiteGraph& graph, const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "split.json");
  if (!meta_in) throw Error("cannot open '" + (dir / "split.json").string() + "'");
  const auto meta = nlohmann::json::parse(meta_in);
  EdgeSplit split;
  split.seed = meta.at("seed").get<std::uint64_t>();
  split.test_fraction = meta.at("test_fraction").get<double>();
  split.train_edges = read_edges_against(graph, dir / "train.tsv");
  split.test_edges = read_edges_against(graph, dir / "test.tsv");
  return split;
}

}  // namespace bplp
