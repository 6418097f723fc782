#include "bplp/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "bplp/error.hpp"

namespace bplp {

namespace {

struct Counts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Counts check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw MetricError("scores and labels differ in length (" + std::to_string(scores.size()) +
                      " vs " + std::to_string(labels.size()) + ")");
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw MetricError("score " + std::to_string(i) + " is NaN");
    if (labels[i] == 1)
      ++c.positives;
    else if (labels[i] == 0)
      ++c.negatives;
    else
      throw MetricError("labels must be 0 or 1");
  }
  return c;
}

/// Indices sorted by score descending.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const auto c = check_inputs(scores, labels);
  if (c.positives == 0 || c.negatives == 0)
    throw MetricError("AUROC is undefined unless both classes are present");
  const auto order = descending_order(scores);
  // walk from the top; each positive block beats every negative below it
  double wins = 0.0;
  std::size_t neg_above = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, p = 0, q = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? p : q)++;
      ++j;
    }
    const double below = static_cast<double>(c.negatives - neg_above - q);
    wins += static_cast<double>(p) * (below + 0.5 * static_cast<double>(q));
    neg_above += q;
    i = j;
  }
  return wins / (static_cast<double>(c.positives) * static_cast<double>(c.negatives));
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  const auto c = check_inputs(scores, labels);
  if (c.positives == 0) throw MetricError("AUPR is undefined without positives");
  const auto order = descending_order(scores);
  double area = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, p = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      p += labels[order[j]] == 1;
      ++j;
    }
    tp += p;
    seen = j;
    if (p > 0)
      area += (static_cast<double>(p) / static_cast<double>(c.positives)) *
              (static_cast<double>(tp) / static_cast<double>(seen));
    i = j;
  }
  return area;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"method", r.method_name},
          {"dataset", r.dataset_name},
          {"seed", r.seed},
          {"aupr", r.aupr},
          {"auroc", r.auroc},
          {"runtime_seconds", r.runtime_seconds},
          {"n_positives", r.n_positives},
          {"n_candidates", r.n_candidates},
          {"config_digest", r.config_digest}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.method_name = j.at("method");
  r.dataset_name = j.at("dataset");
  r.seed = j.at("seed");
  r.aupr = j.at("aupr");
  r.auroc = j.at("auroc");
  r.runtime_seconds = j.at("runtime_seconds");
  r.n_positives = j.at("n_positives");
  r.n_candidates = j.at("n_candidates");
  r.config_digest = j.at("config_digest");
  return r;
}

std::vector<int> candidate_labels(std::span<const Pair> candidates, std::span<const Pair> test_edges) {
  std::vector<int> labels(candidates.size(), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    labels[i] = std::binary_search(test_edges.begin(), test_edges.end(), candidates[i]) ? 1 : 0;
  return labels;
}

EvalReport evaluate_method(const BipartiteGraph& graph, const EdgeSplit& split, const Scorer& scorer,
                           const EvaluateOptions& options, ScoreTable* scores_out) {
  const auto train = train_graph(graph, split);
  const auto candidates = candidate_pairs(train);

  const auto start = std::chrono::steady_clock::now();
  ScoreTable table = scorer(train, candidates);
  const auto stop = std::chrono::steady_clock::now();

  if (table.pairs != candidates)
    throw SchemaError(options.method_name + ": scorer returned a different pair list");
  table.validate();

  // the test edges are read only from here on
  std::vector<Pair> test(split.test_edges);
  std::sort(test.begin(), test.end());
  const auto labels = candidate_labels(candidates, test);

  EvalReport r;
  r.method_name = options.method_name;
  r.dataset_name = options.dataset_name;
  r.seed = split.seed;
  r.config_digest = options.config_digest;
  r.runtime_seconds = std::chrono::duration<double>(stop - start).count();
  r.n_candidates = candidates.size();
  r.n_positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  r.aupr = aupr(table.scores, labels);
  r.auroc = auroc(table.scores, labels);
  if (scores_out) *scores_out = std::move(table);
  return r;
}

}  // namespace bplp
