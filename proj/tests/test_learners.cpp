#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "bplp/error.hpp"
#include "bplp/learners.hpp"

using namespace bplp;

namespace {

struct Table {
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;
  DesignView view() const { return DesignView{values, width, labels, {}}; }
};

/// Two Gaussian clouds in `width` dims, class 1 shifted by `shift` along every axis in `axes`.
Table two_clouds(std::mt19937_64& rng, std::size_t per_class, std::size_t width,
                 const std::vector<std::size_t>& axes, double shift, double sd = 1.0) {
  std::normal_distribution<double> noise(0.0, sd);
  Table t;
  t.width = width;
  for (int cls = 0; cls < 2; ++cls)
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> row(width);
      for (auto& x : row) x = noise(rng);
      if (cls == 1)
        for (auto a : axes) row[a] += shift;
      t.values.insert(t.values.end(), row.begin(), row.end());
      t.labels.push_back(cls);
    }
  return t;
}

double mean_log_loss(std::span<const double> p, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s -= y[i] ? std::log(p[i]) : std::log(1.0 - p[i]);
  return s / static_cast<double>(p.size());
}

/// Exhaustive split search: every feature, every distinct midpoint.
std::pair<double, int> exhaustive_best_gain(const DesignView& d, std::span<const double> g,
                                            std::span<const double> h, double lambda, double mcw) {
  const std::size_t n = d.rows();
  const auto term = [&](double gg, double hh) { return gg * gg / (hh + lambda); };
  double G = 0.0, H = 0.0;
  for (std::size_t r = 0; r < n; ++r) G += g[r], H += h[r];
  double best = 0.0;
  int feature = -1;
  for (std::size_t f = 0; f < d.width; ++f) {
    std::vector<double> xs;
    for (std::size_t r = 0; r < n; ++r) xs.push_back(d.at(r, f));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double thr = (xs[i] + xs[i + 1]) / 2;
      double gl = 0.0, hl = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        if (d.at(r, f) < thr) gl += g[r], hl += h[r];
      if (hl < mcw || H - hl < mcw) continue;
      const double gain = 0.5 * (term(gl, hl) + term(G - gl, H - hl) - term(G, H));
      if (gain > best) best = gain, feature = static_cast<int>(f);
    }
  }
  return {best, feature};
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i], aa += a[i] * a[i], bb += b[i] * b[i];
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(Gbdt, SeparableToyFitsClosely) {
  std::mt19937_64 rng(41);
  const auto t = two_clouds(rng, 100, 3, {0}, 10.0, 0.5);
  GbdtConfig cfg;
  cfg.n_trees = 50;
  cfg.max_depth = 3;
  const auto model = fit_gbdt(t.view(), cfg, 1);
  const auto p = predict_gbdt(model, t.values, t.width);
  EXPECT_LT(mean_log_loss(p, t.labels), 0.05);
}

TEST(Gbdt, ZeroTreesGivesBaseRate) {
  Table t{{0, 1, 2, 3}, {0, 1, 1, 1}, 1};
  GbdtConfig cfg;
  cfg.n_trees = 0;
  const auto model = fit_gbdt(t.view(), cfg, 1);
  for (double p : predict_gbdt(model, t.values, 1)) EXPECT_NEAR(p, 0.75, 1e-12);
  EXPECT_EQ(model.train_loss.size(), 1u);
}

TEST(Gbdt, DuplicatedRowsGiveSamePredictions) {
  std::mt19937_64 rng(42);
  const auto t = two_clouds(rng, 60, 4, {1, 2}, 1.0);
  Table twice = t;
  twice.values.insert(twice.values.end(), t.values.begin(), t.values.end());
  twice.labels.insert(twice.labels.end(), t.labels.begin(), t.labels.end());
  GbdtConfig cfg;
  cfg.n_trees = 20;
  cfg.min_child_weight = 0.0;
  cfg.lambda = 0.0;
  const auto a = predict_gbdt(fit_gbdt(t.view(), cfg, 1), t.values, t.width);
  const auto b = predict_gbdt(fit_gbdt(twice.view(), cfg, 1), t.values, t.width);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Gbdt, BalancedNoiseAveragesOneHalf) {
  std::mt19937_64 rng(43);
  const auto t = two_clouds(rng, 200, 5, {}, 0.0);
  GbdtConfig cfg;
  cfg.n_trees = 30;
  const auto model = fit_gbdt(t.view(), cfg, 1);
  const auto p = predict_gbdt(model, t.values, t.width);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size()), 0.5, 0.1);
}

TEST(Gbdt, TrainingLossNeverIncreases) {
  std::mt19937_64 rng(44);
  const auto t = two_clouds(rng, 150, 6, {0, 3}, 0.8);
  GbdtConfig cfg;
  cfg.n_trees = 60;
  const auto model = fit_gbdt(t.view(), cfg, 1);
  ASSERT_EQ(model.train_loss.size(), 61u);
  for (std::size_t i = 1; i < model.train_loss.size(); ++i)
    EXPECT_LE(model.train_loss[i], model.train_loss[i - 1] + 1e-12) << "round " << i;
}

TEST(Gbdt, BestSplitMatchesExhaustiveSearch) {
  std::mt19937_64 rng(45);
  std::uniform_int_distribution<int> small(0, 6);
  std::normal_distribution<double> gn(0.0, 1.0);
  std::uniform_real_distribution<double> hu(0.05, 0.25);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + trial % 46, w = 1 + trial % 4;
    Table t;
    t.width = w;
    for (std::size_t i = 0; i < n * w; ++i) t.values.push_back(small(rng));  // many ties
    t.labels.assign(n, 0);
    std::vector<double> g(n), h(n);
    for (std::size_t r = 0; r < n; ++r) g[r] = gn(rng), h[r] = hu(rng);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    GbdtConfig cfg;
    cfg.min_child_weight = 0.3;
    const auto node = best_split(t.view(), g, h, rows, cfg);
    const auto [gain, feature] = exhaustive_best_gain(t.view(), g, h, cfg.lambda, cfg.min_child_weight);
    if (feature < 0) {
      EXPECT_EQ(node.feature, -1);
      continue;
    }
    ASSERT_GE(node.feature, 0) << "trial " << trial;
    EXPECT_NEAR(node.gain, gain, 1e-10) << "trial " << trial;
  }
}

TEST(Gbdt, WidthMismatchAndDegenerateLabels) {
  Table t{{0, 1, 2, 3, 4, 5, 6, 7}, {0, 1, 0, 1}, 2};
  GbdtConfig cfg;
  cfg.n_trees = 2;
  const auto model = fit_gbdt(t.view(), cfg, 1);
  EXPECT_THROW(predict_gbdt(model, t.values, 1), SchemaError);
  Table one{{0, 1, 2, 3}, {1, 1, 1, 1}, 1};
  EXPECT_THROW(fit_gbdt(one.view(), cfg, 1), DegenerateDataError);
}

TEST(Gbdt, JsonRoundTripPredictsIdentically) {
  std::mt19937_64 rng(46);
  const auto t = two_clouds(rng, 50, 3, {2}, 1.5);
  GbdtConfig cfg;
  cfg.n_trees = 15;
  const auto model = fit_gbdt(t.view(), cfg, 1);
  const auto back = gbdt_from_json(nlohmann::json::parse(to_json(model).dump()));
  EXPECT_EQ(predict_gbdt(model, t.values, t.width), predict_gbdt(back, t.values, t.width));
}

TEST(Pca, WeightIsLeadingEigenvectorOfCovariance) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n = 2000, w = 13;
  Table t;
  t.width = w;
  for (std::size_t r = 0; r < n; ++r) {
    const double latent = 3.0 * noise(rng);
    for (std::size_t c = 0; c < w; ++c)
      t.values.push_back(latent * (c % 3 == 0 ? 1.0 : 0.3) + noise(rng) * (1.0 + 0.5 * c) + 10.0 * c);
  }
  const auto model = fit_reduction(DesignView{t.values, w, {}, {}}, ReductionKind::pca);

  Eigen::MatrixXd z(n, w);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) z(r, c) = (t.values[r * w + c] - model.mean[c]) / model.scale[c];
  const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n);
  const Eigen::Map<const Eigen::VectorXd> wt(model.weights.data(), w);
  EXPECT_NEAR(wt.norm(), 1.0, 1e-12);
  EXPECT_LT((cov * wt - model.leading_eigenvalue * wt).norm(), 1e-6);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  EXPECT_NEAR(model.leading_eigenvalue, es.eigenvalues()[w - 1], 1e-8);
  EXPECT_NEAR(std::abs(wt.dot(es.eigenvectors().col(w - 1))), 1.0, 1e-8);
}

TEST(Pca, IsotropicDataExplainsAboutOneOverWidth) {
  std::mt19937_64 rng(48);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t n = 5000, w = 13;
  std::vector<double> values(n * w);
  for (auto& x : values) x = noise(rng);
  const auto model = fit_reduction(DesignView{values, w, {}, {}}, ReductionKind::pca);
  EXPECT_NEAR(model.explained_variance_ratio, 1.0 / 13.0, 0.05);
}

TEST(Lda, RecoversMeanDifferenceForSphericalClasses) {
  std::mt19937_64 rng(49);
  const auto t = two_clouds(rng, 2000, 4, {0, 1}, 1.0);
  const auto model = fit_reduction(t.view(), ReductionKind::lda);
  // weights in raw units should point along (1, 1, 0, 0)
  const std::vector<double> want = {1.0, 1.0, 0.0, 0.0};
  std::vector<double> got(4);
  for (std::size_t c = 0; c < 4; ++c) got[c] = model.weights[c] / model.scale[c] * model.orientation;
  EXPECT_GT(cosine(got, want), 0.99);
}

TEST(Lda, SeparatedCloudsConcentrateOnTheSeparatingAxis) {
  std::mt19937_64 rng(50);
  const auto t = two_clouds(rng, 500, 5, {3}, 8.0, 0.5);
  const auto model = fit_reduction(t.view(), ReductionKind::lda);
  const double on_axis = std::abs(model.weights[3]);
  for (std::size_t c = 0; c < 5; ++c)
    if (c != 3) EXPECT_LT(std::abs(model.weights[c]), 0.1 * on_axis);
}

TEST(Reduction, PositivesScoreHigherOnAverage) {
  std::mt19937_64 rng(51);
  // class 1 sits on the negative side so orientation must flip for some fits
  const auto t = two_clouds(rng, 300, 3, {0, 1, 2}, -2.0);
  for (auto kind : {ReductionKind::pca, ReductionKind::lda}) {
    const auto model = fit_reduction(t.view(), kind);
    const auto s = score_reduction(model, t.values, t.width);
    double pos = 0.0, neg = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) (t.labels[r] ? pos : neg) += s[r];
    EXPECT_GT(pos, neg) << to_string(kind);
  }
}

TEST(Reduction, AffineShiftOfColumnsLeavesScoresUnchanged) {
  std::mt19937_64 rng(52);
  const auto t = two_clouds(rng, 200, 4, {1}, 1.5);
  Table shifted = t;
  for (std::size_t r = 0; r < t.labels.size(); ++r)
    for (std::size_t c = 0; c < 4; ++c) shifted.values[r * 4 + c] = 3.0 * t.values[r * 4 + c] + 7.0 * c - 2.0;
  for (auto kind : {ReductionKind::pca, ReductionKind::lda}) {
    const auto a = score_reduction(fit_reduction(t.view(), kind), t.values, 4);
    const auto b = score_reduction(fit_reduction(shifted.view(), kind), shifted.values, 4);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  }
}

TEST(Reduction, TrainingProjectionMatchesManualProjection) {
  std::mt19937_64 rng(53);
  const auto t = two_clouds(rng, 100, 3, {0}, 2.0);
  const auto model = fit_reduction(t.view(), ReductionKind::lda);
  const auto s = score_reduction(model, t.values, 3);
  for (std::size_t r = 0; r < s.size(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < 3; ++c) acc += model.weights[c] * (t.values[r * 3 + c] - model.mean[c]) / model.scale[c];
    EXPECT_NEAR(s[r], model.orientation * acc + model.offset, 1e-12);
  }
  const auto back = reduction_from_json(nlohmann::json::parse(to_json(model).dump()));
  EXPECT_EQ(score_reduction(back, t.values, 3), s);
}

TEST(Reduction, ConstantColumnsAreDroppedAndFitsAreDeterministic) {
  std::mt19937_64 rng(54);
  auto t = two_clouds(rng, 100, 3, {0}, 2.0);
  for (std::size_t r = 0; r < t.labels.size(); ++r) t.values[r * 3 + 2] = 4.0;
  const auto a = fit_reduction(t.view(), ReductionKind::pca);
  const auto b = fit_reduction(t.view(), ReductionKind::pca);
  EXPECT_EQ(a.scale[2], 0.0);
  EXPECT_EQ(a.weights[2], 0.0);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_THROW(score_reduction(a, t.values, 2), SchemaError);
}
