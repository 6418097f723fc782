#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bplp/error.hpp"
#include "bplp/learners.hpp"
#include "bplp/parallel.hpp"

namespace bplp {

DesignView design_view(const PairFeatures& data) {
  return DesignView{data.values, kFeatureWidth, data.labels, {}};
}

double RegressionTree::predict(std::span<const double> row) const noexcept {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = row[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].weight;
}

double GbdtModel::margin(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(row);
  return base_score + config.learning_rate * sum;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda); }

double score_term(double g, double h, double lambda) { return g * g / (h + lambda); }

double log_loss(const DesignView& d, std::span<const double> margin) {
  double total = 0.0, mass = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double z = margin[r];
    // log(1 + e^z) - y z, evaluated stably
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += d.weight(r) * (softplus - d.labels[r] * z);
    mass += d.weight(r);
  }
  return total / mass;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

/// Scan one feature over rows sorted by value and return the best split.
SplitCandidate scan_feature(const DesignView& d, std::span<const double> grad,
                            std::span<const double> hess, std::span<const std::size_t> sorted,
                            std::size_t feature, double g_total, double h_total,
                            const GbdtConfig& cfg) {
  SplitCandidate best;
  const double parent = score_term(g_total, h_total, cfg.lambda);
  double gl = 0.0, hl = 0.0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const auto r = sorted[i];
    gl += grad[r];
    hl += hess[r];
    const double here = d.at(r, feature);
    const double next = d.at(sorted[i + 1], feature);
    if (!(here < next)) continue;
    const double hr = h_total - hl;
    if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
    const double gr = g_total - gl;
    const double gain = 0.5 * (score_term(gl, hl, cfg.lambda) + score_term(gr, hr, cfg.lambda) -
                               parent);
    if (gain > best.gain) {
      double mid = here + (next - here) / 2.0;
      if (!(mid > here)) mid = next;
      best = {gain, static_cast<int>(feature), mid};
    }
  }
  return best;
}

}  // namespace

TreeNode best_split(const DesignView& d, std::span<const double> grad,
                    std::span<const double> hess, std::span<const std::size_t> rows,
                    const GbdtConfig& cfg) {
  double g = 0.0, h = 0.0;
  for (auto r : rows) {
    g += grad[r];
    h += hess[r];
  }
  TreeNode node;
  node.weight = leaf_weight(g, h, cfg.lambda);
  SplitCandidate best;
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  for (std::size_t f = 0; f < d.width; ++f) {
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](std::size_t a, std::size_t b) { return d.at(a, f) < d.at(b, f); });
    const auto cand = scan_feature(d, grad, hess, sorted, f, g, h, cfg);
    if (cand.gain > best.gain) best = cand;  // strict: lowest feature wins ties
  }
  if (best.feature >= 0 && best.gain > cfg.min_split_gain) {
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.gain = best.gain;
  }
  return node;
}

namespace {

/// Grows one tree level by level. Rows are kept per node in feature-sorted
/// order so each level costs one pass per feature.
RegressionTree grow_tree(const DesignView& d, std::span<const double> grad,
                         std::span<const double> hess,
                         const std::vector<std::vector<std::size_t>>& presorted,
                         const GbdtConfig& cfg) {
  const std::size_t n = d.rows();
  RegressionTree tree;
  std::vector<int> node_of(n, 0);
  tree.nodes.push_back({});
  std::vector<int> frontier = {0};
  std::vector<double> node_g(1, 0.0), node_h(1, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    node_g[0] += grad[r];
    node_h[0] += hess[r];
  }

  for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
    // slot of each tree node in the frontier (-1 when not expanding)
    std::vector<int> slot(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot[frontier[s]] = static_cast<int>(s);

    // per-feature best split for every frontier node
    std::vector<std::vector<SplitCandidate>> per_feature(d.width);
    parallel_rows(
        d.width, [] { return 0; },
        [&](std::size_t f, int&) {
          const auto m = frontier.size();
          std::vector<SplitCandidate> best(m);
          std::vector<double> gl(m, 0.0), hl(m, 0.0);
          std::vector<std::ptrdiff_t> last(m, -1);  // previous row seen in this node
          auto consider = [&](std::size_t s, std::size_t prev, std::size_t r) {
            const double here = d.at(prev, f), next = d.at(r, f);
            if (!(here < next)) return;
            const double hr = node_h[s] - hl[s];
            if (hl[s] < cfg.min_child_weight || hr < cfg.min_child_weight) return;
            const double gr = node_g[s] - gl[s];
            const double gain =
                0.5 * (score_term(gl[s], hl[s], cfg.lambda) + score_term(gr, hr, cfg.lambda) -
                       score_term(node_g[s], node_h[s], cfg.lambda));
            if (gain > best[s].gain) {
              double mid = here + (next - here) / 2.0;
              if (!(mid > here)) mid = next;
              best[s] = {gain, static_cast<int>(f), mid};
            }
          };
          for (auto r : presorted[f]) {
            const int node = node_of[r];
            if (node < 0) continue;
            const int s = slot[node];
            if (s < 0) continue;
            if (last[s] >= 0) consider(static_cast<std::size_t>(s), static_cast<std::size_t>(last[s]), r);
            gl[s] += grad[r];
            hl[s] += hess[r];
            last[s] = static_cast<std::ptrdiff_t>(r);
          }
          per_feature[f] = std::move(best);
        });

    std::vector<int> next_frontier;
    std::vector<double> next_g, next_h;
    std::vector<int> child_base(frontier.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      SplitCandidate best;
      for (std::size_t f = 0; f < d.width; ++f)
        if (per_feature[f][s].gain > best.gain) best = per_feature[f][s];
      auto& node = tree.nodes[frontier[s]];
      if (best.feature < 0 || !(best.gain > cfg.min_split_gain)) continue;
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.gain = best.gain;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      child_base[s] = node.left;
      tree.nodes.push_back({});
      tree.nodes.push_back({});
    }
    // route rows to children and accumulate their statistics
    std::vector<double> cg(tree.nodes.size(), 0.0), ch(tree.nodes.size(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      const int s = slot[node];
      if (s < 0 || child_base[s] < 0) {
        node_of[r] = -1;  // settled in a leaf
        continue;
      }
      const auto& parent = tree.nodes[node];
      const int child = d.at(r, parent.feature) < parent.threshold ? parent.left : parent.right;
      node_of[r] = child;
      cg[child] += grad[r];
      ch[child] += hess[r];
    }
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      if (child_base[s] < 0) continue;
      for (int c : {child_base[s], child_base[s] + 1}) {
        next_frontier.push_back(c);
        next_g.push_back(cg[c]);
        next_h.push_back(ch[c]);
      }
    }
    frontier = std::move(next_frontier);
    node_g = std::move(next_g);
    node_h = std::move(next_h);
  }

  // leaf weights from the final row assignment
  std::vector<double> lg(tree.nodes.size(), 0.0), lh(tree.nodes.size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    int i = 0;
    while (tree.nodes[i].feature >= 0) {
      const auto& nd = tree.nodes[i];
      i = d.at(r, nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    lg[i] += grad[r];
    lh[i] += hess[r];
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i)
    if (tree.nodes[i].feature < 0) tree.nodes[i].weight = leaf_weight(lg[i], lh[i], cfg.lambda);
  return tree;
}

}  // namespace

GbdtModel fit_gbdt(const DesignView& d, const GbdtConfig& cfg, std::uint64_t /*seed*/) {
  // Exact greedy boosting has no sampling, so the seed does not enter the fit.
  const std::size_t n = d.rows();
  if (n < 2) throw DegenerateDataError("GBDT needs at least 2 rows");
  if (d.labels.size() != n) throw SchemaError("GBDT: label count does not match row count");
  if (cfg.n_trees < 0 || cfg.max_depth < 0 || !(cfg.learning_rate > 0.0))
    throw ArgumentError("GBDT: invalid configuration");
  double pos = 0.0, mass = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    pos += d.weight(r) * d.labels[r];
    mass += d.weight(r);
  }
  if (pos <= 0.0 || pos >= mass)
    throw DegenerateDataError("GBDT needs both classes in the training labels");

  GbdtModel model;
  model.config = cfg;
  model.width = d.width;
  model.base_score = std::log(pos / (mass - pos));

  std::vector<std::vector<std::size_t>> presorted(d.width);
  for (std::size_t f = 0; f < d.width; ++f) {
    auto& idx = presorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return d.at(a, f) < d.at(b, f); });
  }

  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  model.train_loss.push_back(log_loss(d, margin));
  for (int t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t r = 0; r < n; ++r) {
      const double p = sigmoid(margin[r]);
      grad[r] = d.weight(r) * (p - d.labels[r]);
      hess[r] = d.weight(r) * std::max(p * (1.0 - p), 1e-16);
    }
    auto tree = grow_tree(d, grad, hess, presorted, cfg);
    for (std::size_t r = 0; r < n; ++r)
      margin[r] += cfg.learning_rate * tree.predict({d.values.data() + r * d.width, d.width});
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(log_loss(d, margin));
  }
  return model;
}

GbdtModel fit_gbdt(const PairFeatures& data, const GbdtConfig& config, std::uint64_t seed) {
  return fit_gbdt(design_view(data), config, seed);
}

std::vector<double> predict_gbdt(const GbdtModel& model, std::span<const double> values,
                                 std::size_t width) {
  if (width != model.width)
    throw SchemaError("GBDT: feature width " + std::to_string(width) + " does not match model width " +
                      std::to_string(model.width));
  const std::size_t n = width == 0 ? 0 : values.size() / width;
  std::vector<double> out(n);
  parallel_rows(
      n, [] { return 0; },
      [&](std::size_t r, int&) { out[r] = sigmoid(model.margin(values.subspan(r * width, width))); });
  return out;
}

std::vector<double> predict_gbdt(const GbdtModel& model, const PairFeatures& data) {
  return predict_gbdt(model, data.values, kFeatureWidth);
}

nlohmann::json to_json(const GbdtModel& model) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& t : model.trees) {
    // nested form: {"leaf": w} or {"feature", "threshold", "left", "right"}
    std::function<json(int)> emit = [&](int i) -> json {
      const auto& n = t.nodes[i];
      if (n.feature < 0) return json{{"leaf", n.weight}};
      return json{{"feature", n.feature},
                  {"threshold", n.threshold},
                  {"gain", n.gain},
                  {"left", emit(n.left)},
                  {"right", emit(n.right)}};
    };
    trees.push_back(emit(0));
  }
  return json{{"kind", "gbdt"},
              {"width", model.width},
              {"base_score", model.base_score},
              {"config",
               {{"n_trees", model.config.n_trees},
                {"max_depth", model.config.max_depth},
                {"learning_rate", model.config.learning_rate},
                {"lambda", model.config.lambda},
                {"min_child_weight", model.config.min_child_weight},
                {"min_split_gain", model.config.min_split_gain}}},
              {"train_loss", model.train_loss},
              {"trees", trees}};
}

GbdtModel gbdt_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "gbdt") throw SchemaError("not a GBDT model");
  GbdtModel m;
  m.width = j.at("width").get<std::size_t>();
  m.base_score = j.at("base_score").get<double>();
  const auto& c = j.at("config");
  m.config.n_trees = c.at("n_trees");
  m.config.max_depth = c.at("max_depth");
  m.config.learning_rate = c.at("learning_rate");
  m.config.lambda = c.at("lambda");
  m.config.min_child_weight = c.at("min_child_weight");
  m.config.min_split_gain = c.at("min_split_gain");
  m.train_loss = j.value("train_loss", std::vector<double>{});
  for (const auto& jt : j.at("trees")) {
    RegressionTree t;
    std::function<int(const nlohmann::json&)> read = [&](const nlohmann::json& n) -> int {
      const int i = static_cast<int>(t.nodes.size());
      t.nodes.push_back({});
      if (n.contains("leaf")) {
        t.nodes[i].weight = n.at("leaf");
        return i;
      }
      t.nodes[i].feature = n.at("feature");
      t.nodes[i].threshold = n.at("threshold");
      t.nodes[i].gain = n.value("gain", 0.0);
      const int l = read(n.at("left"));
      const int r = read(n.at("right"));
      t.nodes[i].left = l;
      t.nodes[i].right = r;
      return i;
    };
    read(jt);
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace bplp
