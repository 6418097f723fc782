#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bplp/graph.hpp"
#include "bplp/scores.hpp"

namespace bplp {

/// Mann-Whitney AUROC: P(score+ > score-) + P(tie) / 2.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Step-wise area under the precision-recall curve; tied scores form one step.
double aupr(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  std::string method_name;
  std::string dataset_name;
  std::uint64_t seed = 0;
  double aupr = 0.0;
  double auroc = 0.0;
  double runtime_seconds = 0.0;
  std::size_t n_positives = 0;
  std::size_t n_candidates = 0;
  std::string config_digest;  // 16 hex digits
};

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// A scorer sees only the train graph and the pairs to score.
using Scorer = std::function<ScoreTable(const BipartiteGraph& train, std::span<const Pair> candidates)>;

/// 1 for candidates present in `test_edges` (both sorted), else 0.
std::vector<int> candidate_labels(std::span<const Pair> candidates, std::span<const Pair> test_edges);

struct EvaluateOptions {
  std::string method_name;
  std::string dataset_name;
  std::string config_digest;
};

/// Scores every candidate pair of the split with `scorer`, timing only the
/// scoring call, then labels the candidates against the test edges.
EvalReport evaluate_method(const BipartiteGraph& graph, const EdgeSplit& split, const Scorer& scorer,
                           const EvaluateOptions& options, ScoreTable* scores_out = nullptr);

}  // namespace bplp
