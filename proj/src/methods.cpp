#include "bplp/methods.hpp"

#include <algorithm>
#include <set>

#include "bplp/error.hpp"
#include "bplp/rng.hpp"

namespace bplp {

namespace {

using nlohmann::json;

/// Pulls typed fields out of one JSON object and rejects leftovers.
class BlockReader {
 public:
  BlockReader(const json& j, std::string block) : j_(j), block_(std::move(block)) {
    if (!j_.is_object()) throw ArgumentError("'" + block_ + "' must be a JSON object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ArgumentError("'" + block_ + "." + key + "': " + e.what());
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ArgumentError("unknown key '" + block_ + "." + k + "'");
  }

 private:
  const json& j_;
  std::string block_;
  std::set<std::string> seen_;
};

void read_train(const json& j, const std::string& block, TrainConfig& c) {
  BlockReader r(j, block);
  std::string optimizer = c.optimizer == Optimizer::adam ? "adam" : "sgd";
  r.read("dim", c.dim);
  r.read("epochs", c.epochs);
  r.read("learning_rate", c.learning_rate);
  r.read("l2_reg", c.l2_reg);
  r.read("batch_size", c.batch_size);
  r.read("layers", c.layers);
  r.read("init_stddev", c.init_stddev);
  r.read("optimizer", optimizer);
  r.finish();
  if (optimizer == "adam")
    c.optimizer = Optimizer::adam;
  else if (optimizer == "sgd")
    c.optimizer = Optimizer::sgd;
  else
    throw ArgumentError("'" + block + ".optimizer' must be adam or sgd");
  if (c.dim < 1) throw ArgumentError("'" + block + ".dim' must be >= 1");
  if (c.layers < 0) throw ArgumentError("'" + block + ".layers' must be >= 0");
  if (c.epochs < 0) throw ArgumentError("'" + block + ".epochs' must be >= 0");
  if (c.batch_size < 1) throw ArgumentError("'" + block + ".batch_size' must be >= 1");
}

json train_json(const TrainConfig& c) {
  return {{"dim", c.dim},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"l2_reg", c.l2_reg},
          {"batch_size", c.batch_size},
          {"layers", c.layers},
          {"init_stddev", c.init_stddev},
          {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"}};
}

json gbdt_json(const GbdtConfig& c) {
  return {{"n_trees", c.n_trees},
          {"max_depth", c.max_depth},
          {"learning_rate", c.learning_rate},
          {"lambda", c.lambda},
          {"min_child_weight", c.min_child_weight},
          {"min_split_gain", c.min_split_gain}};
}

json measures_json(const MeasureConfig& c) {
  return {{"pagerank_damping", c.pagerank_damping},
          {"pagerank_tolerance", c.pagerank_tolerance},
          {"eigenvector_tolerance", c.eigenvector_tolerance},
          {"katz_alpha", c.katz_alpha},
          {"katz_beta", c.katz_beta},
          {"katz_tolerance", c.katz_tolerance},
          {"max_iterations", c.max_iterations}};
}

ScoreTable finish_table(ScoreTable t, const std::string& method, const MethodSettings& s,
                        const BipartiteGraph& train, std::uint64_t seed) {
  t.method_name = method;
  t.params = method_params(method, s).dump();
  t.graph_fingerprint = train.fingerprint();
  t.seed = seed;
  return t;
}

ScoreTable with_scores(std::span<const Pair> pairs, std::vector<double> scores) {
  ScoreTable t;
  t.pairs.assign(pairs.begin(), pairs.end());
  t.scores = std::move(scores);
  return t;
}

}  // namespace

MethodSettings settings_from_json(const json& j) {
  MethodSettings s;
  if (j.is_null()) return s;
  BlockReader top(j, "params");
  json katz = json::object(), lp = json::object(), spm = json::object(), bpr = json::object(),
       lightgcn = json::object(), gbdt = json::object(), measures = json::object();
  top.read("katz", katz);
  top.read("lp", lp);
  top.read("spm", spm);
  top.read("bpr", bpr);
  top.read("lightgcn", lightgcn);
  top.read("gbdt", gbdt);
  top.read("measures", measures);
  top.finish();
  {
    BlockReader r(katz, "katz");
    r.read("alpha", s.katz.alpha);
    r.read("max_length", s.katz.max_length);
    r.read("tolerance", s.katz.tolerance);
    r.finish();
  }
  {
    BlockReader r(lp, "lp");
    r.read("epsilon", s.lp_epsilon);
    r.finish();
  }
  {
    BlockReader r(spm, "spm");
    r.read("perturbation_fraction", s.spm.perturbation_fraction);
    r.read("repetitions", s.spm.repetitions);
    r.read("degeneracy_tolerance", s.spm.degeneracy_tolerance);
    r.read("node_cap", s.spm.node_cap);
    r.finish();
  }
  read_train(bpr, "bpr", s.bpr);
  read_train(lightgcn, "lightgcn", s.lightgcn);
  {
    BlockReader r(gbdt, "gbdt");
    r.read("n_trees", s.gbdt.n_trees);
    r.read("max_depth", s.gbdt.max_depth);
    r.read("learning_rate", s.gbdt.learning_rate);
    r.read("lambda", s.gbdt.lambda);
    r.read("min_child_weight", s.gbdt.min_child_weight);
    r.read("min_split_gain", s.gbdt.min_split_gain);
    r.finish();
  }
  {
    BlockReader r(measures, "measures");
    r.read("pagerank_damping", s.measures.pagerank_damping);
    r.read("pagerank_tolerance", s.measures.pagerank_tolerance);
    r.read("eigenvector_tolerance", s.measures.eigenvector_tolerance);
    r.read("katz_alpha", s.measures.katz_alpha);
    r.read("katz_beta", s.measures.katz_beta);
    r.read("katz_tolerance", s.measures.katz_tolerance);
    r.read("max_iterations", s.measures.max_iterations);
    r.finish();
  }
  if (!(s.lp_epsilon > 0)) throw ArgumentError("'lp.epsilon' must be > 0");
  return s;
}

json to_json(const MethodSettings& s) {
  return {{"katz", {{"alpha", s.katz.alpha}, {"max_length", s.katz.max_length}, {"tolerance", s.katz.tolerance}}},
          {"lp", {{"epsilon", s.lp_epsilon}}},
          {"spm",
           {{"perturbation_fraction", s.spm.perturbation_fraction},
            {"repetitions", s.spm.repetitions},
            {"degeneracy_tolerance", s.spm.degeneracy_tolerance},
            {"node_cap", s.spm.node_cap}}},
          {"bpr", train_json(s.bpr)},
          {"lightgcn", train_json(s.lightgcn)},
          {"gbdt", gbdt_json(s.gbdt)},
          {"measures", measures_json(s.measures)}};
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {"l3",  "l5",   "l7",  "katz", "lp",  "pa",  "dist",
                                                 "spm", "gbdt", "pca", "lda",  "bpr", "lightgcn"};
  return names;
}

bool is_known_method(const std::string& name) {
  const auto& m = known_methods();
  return std::find(m.begin(), m.end(), name) != m.end();
}

json method_params(const std::string& method, const MethodSettings& s) {
  const json all = to_json(s);
  if (method == "l3" || method == "l5" || method == "l7")
    return {{"length", method[1] - '0'}, {"normalization", "sqrt_degree"}};
  if (method == "katz" || method == "lp" || method == "spm" || method == "bpr" || method == "lightgcn")
    return all.at(method);
  if (method == "gbdt") return {{"gbdt", all.at("gbdt")}, {"measures", all.at("measures")}};
  if (method == "pca" || method == "lda") return {{"measures", all.at("measures")}};
  if (method == "pa" || method == "dist") return json::object();
  throw ArgumentError("unknown method '" + method + "'");
}

Scorer make_scorer(const std::string& method, const MethodSettings& s, std::uint64_t seed) {
  if (!is_known_method(method)) throw ArgumentError("unknown method '" + method + "'");
  return [method, s, seed](const BipartiteGraph& train, std::span<const Pair> pairs) -> ScoreTable {
    ScoreTable t;
    if (method == "l3" || method == "l5" || method == "l7") {
      t = score_path_index(train, pairs, method[1] - '0');
    } else if (method == "katz") {
      t = score_katz(train, s.katz, pairs);
    } else if (method == "lp") {
      t = score_lp(train, s.lp_epsilon, pairs);
    } else if (method == "pa") {
      t = score_pa(train, pairs);
    } else if (method == "dist") {
      t = score_dist(train, pairs);
    } else if (method == "spm") {
      t = score_spm(train, s.spm, pairs, derive_seed(seed, 31));
    } else if (method == "bpr" || method == "lightgcn") {
      TrainConfig c = method == "bpr" ? s.bpr : s.lightgcn;
      if (method == "bpr") c.layers = 0;
      c.seed = derive_seed(seed, 21);
      t = scores_from_embeddings(train_lightgcn(train, c), pairs);
    } else {
      const auto measures = compute_node_measures(train, s.measures);
      const auto data = build_pair_dataset(train, measures, derive_seed(seed, 11));
      const auto features = pair_features(train, measures, pairs);
      if (method == "gbdt") {
        const auto model = fit_gbdt(data, s.gbdt, derive_seed(seed, 12));
        t = with_scores(pairs, predict_gbdt(model, features));
      } else {
        const auto model = fit_reduction(data, parse_reduction_kind(method));
        t = with_scores(pairs, score_reduction(model, features));
      }
    }
    return finish_table(std::move(t), method, s, train, seed);
  };
}

}  // namespace bplp
