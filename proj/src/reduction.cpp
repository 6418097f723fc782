#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "bplp/error.hpp"
#include "bplp/learners.hpp"

namespace bplp {

std::string to_string(ReductionKind kind) { return kind == ReductionKind::pca ? "pca" : "lda"; }

ReductionKind parse_reduction_kind(const std::string& name) {
  if (name == "pca") return ReductionKind::pca;
  if (name == "lda") return ReductionKind::lda;
  throw ArgumentError("unknown reduction '" + name + "'");
}

namespace {

/// Standardized copy of the kept (non-constant) columns plus the statistics.
struct Standardized {
  Eigen::MatrixXd z;             // rows x kept
  std::vector<std::size_t> kept;  // original column per kept column
  std::vector<double> mean, scale;
};

Standardized standardize(const DesignView& d) {
  const std::size_t n = d.rows(), w = d.width;
  Standardized s;
  s.mean.assign(w, 0.0);
  s.scale.assign(w, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) s.mean[c] += d.at(r, c);
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t c = 0; c < w; ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dv = d.at(r, c) - s.mean[c];
      ss += dv * dv;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    // relative threshold: a column whose spread is rounding noise is constant
    if (sd > 1e-12 * std::max(1.0, std::abs(s.mean[c]))) {
      s.scale[c] = sd;
      s.kept.push_back(c);
    }
  }
  s.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.kept.size()));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < s.kept.size(); ++k) {
      const auto c = s.kept[k];
      s.z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          (d.at(r, c) - s.mean[c]) / s.scale[c];
    }
  return s;
}

/// Leading eigenpair of a small symmetric PSD matrix by power iteration.
std::pair<double, Eigen::VectorXd> leading_eigenpair(const Eigen::MatrixXd& c) {
  const auto m = c.rows();
  Eigen::VectorXd x(m);
  for (Eigen::Index i = 0; i < m; ++i) x[i] = 1.0 + 0.1 * static_cast<double>(i);
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 1000000; ++it) {
    Eigen::VectorXd y = c * x;
    const double norm = y.norm();
    if (norm == 0.0) break;
    y /= norm;
    if (y.dot(x) < 0) y = -y;
    const double change = (y - x).lpNorm<Eigen::Infinity>();
    x = y;
    lambda = x.dot(c * x);
    if (change < 1e-14) break;
  }
  return {lambda, x};
}

}  // namespace

LinearReduction fit_reduction(const DesignView& d, ReductionKind kind) {
  const std::size_t n = d.rows();
  if (n < 2) throw DegenerateDataError("reduction needs at least 2 rows");
  const bool labeled = d.labels.size() == n;
  if (kind == ReductionKind::lda && !labeled)
    throw SchemaError("LDA needs one label per row");

  auto s = standardize(d);
  if (s.kept.empty()) throw DegenerateDataError("every feature column is constant");
  const auto k = static_cast<Eigen::Index>(s.kept.size());

  LinearReduction model;
  model.kind = kind;
  model.mean = s.mean;
  model.scale = s.scale;
  model.weights.assign(d.width, 0.0);
  Eigen::VectorXd w;

  if (kind == ReductionKind::pca) {
    const Eigen::MatrixXd cov = (s.z.transpose() * s.z) / static_cast<double>(n);
    auto [lambda, vec] = leading_eigenpair(cov);
    w = vec;
    model.leading_eigenvalue = lambda;
    model.explained_variance_ratio = lambda / cov.trace();
  } else {
    Eigen::VectorXd mu_pos = Eigen::VectorXd::Zero(k), mu_neg = Eigen::VectorXd::Zero(k);
    std::size_t n_pos = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (d.labels[r] == 1) {
        mu_pos += s.z.row(static_cast<Eigen::Index>(r)).transpose();
        ++n_pos;
      } else {
        mu_neg += s.z.row(static_cast<Eigen::Index>(r)).transpose();
      }
    }
    if (n_pos == 0 || n_pos == n) throw DegenerateDataError("LDA needs both classes");
    mu_pos /= static_cast<double>(n_pos);
    mu_neg /= static_cast<double>(n - n_pos);
    Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t r = 0; r < n; ++r) {
      const Eigen::VectorXd dv =
          s.z.row(static_cast<Eigen::Index>(r)).transpose() - (d.labels[r] == 1 ? mu_pos : mu_neg);
      sw.noalias() += dv * dv.transpose();
    }
    const double ridge = 1e-8 * std::max(sw.trace() / static_cast<double>(k), 1e-12);
    sw.diagonal().array() += ridge;
    const Eigen::VectorXd diff = mu_pos - mu_neg;
    if (diff.lpNorm<Eigen::Infinity>() == 0.0)
      throw DegenerateDataError("LDA: class means coincide");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sw);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw DegenerateDataError("LDA: within-class scatter is singular even after ridge");
    w = ldlt.solve(diff);
    if (!w.allFinite() || w.norm() == 0.0)
      throw DegenerateDataError("LDA: discriminant direction is degenerate");
    w.normalize();
  }
  for (Eigen::Index i = 0; i < k; ++i) model.weights[s.kept[static_cast<std::size_t>(i)]] = w[i];

  if (labeled) {
    double pos = 0.0, neg = 0.0;
    std::size_t n_pos = 0;
    const Eigen::VectorXd proj = s.z * w;
    for (std::size_t r = 0; r < n; ++r) {
      if (d.labels[r] == 1) {
        pos += proj[static_cast<Eigen::Index>(r)];
        ++n_pos;
      } else {
        neg += proj[static_cast<Eigen::Index>(r)];
      }
    }
    if (n_pos > 0 && n_pos < n &&
        pos / static_cast<double>(n_pos) < neg / static_cast<double>(n - n_pos))
      model.orientation = -1;
  }
  return model;
}

LinearReduction fit_reduction(const PairFeatures& data, ReductionKind kind) {
  return fit_reduction(design_view(data), kind);
}

std::vector<double> score_reduction(const LinearReduction& model, std::span<const double> values,
                                    std::size_t width) {
  if (width != model.weights.size())
    throw SchemaError("reduction: feature width " + std::to_string(width) +
                      " does not match model width " + std::to_string(model.weights.size()));
  const std::size_t n = width == 0 ? 0 : values.size() / width;
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      if (model.scale[c] == 0.0) continue;
      acc += model.weights[c] * (values[r * width + c] - model.mean[c]) / model.scale[c];
    }
    out[r] = model.orientation * acc + model.offset;
  }
  return out;
}

std::vector<double> score_reduction(const LinearReduction& model, const PairFeatures& data) {
  return score_reduction(model, data.values, kFeatureWidth);
}

nlohmann::json to_json(const LinearReduction& m) {
  return {{"kind", to_string(m.kind)},
          {"weights", m.weights},
          {"offset", m.offset},
          {"orientation", m.orientation},
          {"mean", m.mean},
          {"scale", m.scale},
          {"explained_variance_ratio", m.explained_variance_ratio},
          {"leading_eigenvalue", m.leading_eigenvalue}};
}

LinearReduction reduction_from_json(const nlohmann::json& j) {
  LinearReduction m;
  m.kind = parse_reduction_kind(j.at("kind"));
  m.weights = j.at("weights").get<std::vector<double>>();
  m.offset = j.at("offset");
  m.orientation = j.at("orientation");
  m.mean = j.at("mean").get<std::vector<double>>();
  m.scale = j.at("scale").get<std::vector<double>>();
  m.explained_variance_ratio = j.value("explained_variance_ratio", 0.0);
  m.leading_eigenvalue = j.value("leading_eigenvalue", 0.0);
  return m;
}

}  // namespace bplp
