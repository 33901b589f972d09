#include "srl/safe_region.hpp"

#include <algorithm>
#include <cmath>

namespace srl {

double SafeRegionModel::default_bandwidth(const Embedding& embedding) {
  const Eigen::VectorXd span =
      embedding.points.colwise().maxCoeff() - embedding.points.colwise().minCoeff();
  return 0.02 * span.norm();
}

SafeRegionModel SafeRegionModel::create(Embedding embedding, double bandwidth, double p_t,
                                        double prior_weight) {
  if (!(p_t > 0.0 && p_t < 1.0)) throw ConfigError("p_t must lie strictly inside (0, 1)");
  if (!(prior_weight >= 0.0)) throw ConfigError("prior weight must be non-negative");
  const bool has_safe = std::count(embedding.labels.begin(), embedding.labels.end(), 1) > 0;
  const bool has_unsafe = std::count(embedding.labels.begin(), embedding.labels.end(), 0) > 0;
  if (!has_safe || !has_unsafe)
    throw ConfigError("safe region needs at least one sample of each label");

  SafeRegionModel model;
  model.embedding = std::move(embedding);
  model.gamma_bandwidth = bandwidth > 0.0 ? bandwidth : default_bandwidth(model.embedding);
  if (!(model.gamma_bandwidth > 0.0)) throw ConfigError("gamma bandwidth must be positive");
  model.p_t = p_t;
  model.prior_weight = prior_weight;
  return model;
}

double gamma(const Eigen::VectorXd& y, const SafeRegionModel& model) {
  const int k = model.embedding.size();
  const double h2 = 2.0 * model.gamma_bandwidth * model.gamma_bandwidth;

  Eigen::ArrayXd e(k);
  for (int i = 0; i < k; ++i)
    e(i) = -(model.embedding.points.row(i).transpose() - y).squaredNorm() / h2;

  if (model.prior_weight > 0.0) {
    double num = 0.0, den = model.prior_weight;
    for (int i = 0; i < k; ++i) {
      const double w = std::exp(e(i));
      num += w * model.embedding.labels[i];
      den += w;
    }
    return num / den;
  }

  // Zero prior: plain kernel frequency. Shifted exponents keep the nearest
  // point's weight at 1, which gives the nearest-label limit when every raw
  // weight would underflow.
  const double e_max = e.maxCoeff();
  if (!std::isfinite(e_max)) {
    int nearest = 0;
    (model.embedding.points.rowwise() - y.transpose()).rowwise().squaredNorm().minCoeff(&nearest);
    return static_cast<double>(model.embedding.labels[nearest]);
  }
  const Eigen::ArrayXd w = (e - e_max).exp();
  double num = 0.0;
  for (int i = 0; i < k; ++i) num += w(i) * model.embedding.labels[i];
  return num / w.sum();
}

int predict(const State& x, const SafeRegionModel& model, const StateRanges& ranges) {
  return gamma(map_state(x, model.embedding, ranges), model) > model.p_t ? 1 : 0;
}

RegionGrid region_grid(const SafeRegionModel& model, int resolution) {
  if (model.embedding.points.cols() != 2)
    throw ConfigError("region grid is only defined for two-dimensional embeddings");
  if (resolution < 2) throw ConfigError("grid resolution must be at least 2 per axis");

  const Eigen::Vector2d lo = model.embedding.points.colwise().minCoeff();
  const Eigen::Vector2d hi = model.embedding.points.colwise().maxCoeff();
  const Eigen::Vector2d pad = 0.1 * (hi - lo);

  RegionGrid grid;
  grid.axis1 = Eigen::VectorXd::LinSpaced(resolution, lo(0) - pad(0), hi(0) + pad(0));
  grid.axis2 = Eigen::VectorXd::LinSpaced(resolution, lo(1) - pad(1), hi(1) + pad(1));
  grid.values.resize(resolution, resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      grid.values(i, j) = gamma(Eigen::Vector2d(grid.axis1(i), grid.axis2(j)), model);
  return grid;
}

}  // namespace srl
