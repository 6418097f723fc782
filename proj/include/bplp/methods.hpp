#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "bplp/eval.hpp"
#include "bplp/features.hpp"
#include "bplp/learners.hpp"
#include "bplp/recsys.hpp"
#include "bplp/scores.hpp"
#include "bplp/spm.hpp"

namespace bplp {

/// Parameter blocks for every scoring method.
struct MethodSettings {
  KatzParams katz;
  double lp_epsilon = 0.001;
  SpmParams spm;
  TrainConfig bpr = [] {
    TrainConfig c;
    c.layers = 0;
    return c;
  }();
  TrainConfig lightgcn;
  GbdtConfig gbdt;
  MeasureConfig measures;
};

/// Reads overrides on top of the defaults. Unknown keys are rejected.
MethodSettings settings_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MethodSettings& settings);

/// l3 l5 l7 katz lp pa dist spm gbdt pca lda bpr lightgcn
const std::vector<std::string>& known_methods();
bool is_known_method(const std::string& name);

/// The parameter block a method actually uses (for digests and score headers).
nlohmann::json method_params(const std::string& method, const MethodSettings& settings);

/// Builds the scorer for a method; `seed` drives every random choice it makes.
Scorer make_scorer(const std::string& method, const MethodSettings& settings, std::uint64_t seed);

}  // namespace bplp
