#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bplp/features.hpp"

namespace bplp {

/// Read-only view of a labeled row-major design matrix.
struct DesignView {
  std::span<const double> values;  // rows x width
  std::size_t width = 0;
  std::span<const int> labels;      // 0/1 per row
  std::span<const double> weights;  // optional per-row weights (empty = 1)

  std::size_t rows() const noexcept { return width == 0 ? 0 : values.size() / width; }
  double at(std::size_t r, std::size_t c) const noexcept { return values[r * width + c]; }
  double weight(std::size_t r) const noexcept { return weights.empty() ? 1.0 : weights[r]; }
};

DesignView design_view(const PairFeatures& data);

// ---------------------------------------------------------------------------
// gradient-boosted trees

struct GbdtConfig {
  int n_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  double lambda = 1.0;            // L2 penalty on leaf weights
  double min_child_weight = 1.0;  // minimum hessian mass per child
  double min_split_gain = 0.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] < threshold go left
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf output
  double gain = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(std::span<const double> row) const noexcept;
};

struct GbdtModel {
  GbdtConfig config;
  double base_score = 0.0;  // initial log-odds
  std::size_t width = 0;
  std::vector<RegressionTree> trees;
  /// Weighted mean log-loss on the training data before round 0 and after
  /// every round (size n_trees + 1).
  std::vector<double> train_loss;

  double margin(std::span<const double> row) const;
};

/// Best single split of `rows` under the given gradient statistics (exact
/// greedy). Returns a leaf node (feature == -1) when no split has positive gain.
TreeNode best_split(const DesignView& data, std::span<const double> grad,
                    std::span<const double> hess, std::span<const std::size_t> rows,
                    const GbdtConfig& config);

GbdtModel fit_gbdt(const DesignView& data, const GbdtConfig& config, std::uint64_t seed);
GbdtModel fit_gbdt(const PairFeatures& data, const GbdtConfig& config, std::uint64_t seed);

/// sigmoid(base_score + learning_rate * sum of tree outputs) per row.
std::vector<double> predict_gbdt(const GbdtModel& model, std::span<const double> values,
                                 std::size_t width);
std::vector<double> predict_gbdt(const GbdtModel& model, const PairFeatures& data);

nlohmann::json to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// single-feature linear reductions

enum class ReductionKind { pca, lda };

std::string to_string(ReductionKind kind);
ReductionKind parse_reduction_kind(const std::string& name);

struct LinearReduction {
  ReductionKind kind = ReductionKind::pca;
  std::vector<double> weights;  // per input feature, over standardized values
  double offset = 0.0;          // added after projection
  int orientation = 1;          // +1 or -1
  std::vector<double> mean;     // standardization statistics
  std::vector<double> scale;    // 0 marks a dropped constant column
  double explained_variance_ratio = 0.0;  // pca only
  double leading_eigenvalue = 0.0;        // pca only
};

LinearReduction fit_reduction(const DesignView& data, ReductionKind kind);
LinearReduction fit_reduction(const PairFeatures& data, ReductionKind kind);

std::vector<double> score_reduction(const LinearReduction& model, std::span<const double> values,
                                    std::size_t width);
std::vector<double> score_reduction(const LinearReduction& model, const PairFeatures& data);

nlohmann::json to_json(const LinearReduction& model);
LinearReduction reduction_from_json(const nlohmann::json& j);

}  // namespace bplp
