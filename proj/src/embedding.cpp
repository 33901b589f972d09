#include "srl/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "srl/rng.hpp"
#include "srl/safety_oracle.hpp"

namespace srl {

namespace {

// Row entropy (nats) and row distribution for a given precision beta, using a
// shifted exponent so the nearest neighbor never underflows.
struct RowResult {
  double perplexity;
  Eigen::VectorXd p;  // full-length row, self entry zero
};

RowResult row_affinities(const Eigen::VectorXd& d2_row, int self, double beta) {
  const int k = static_cast<int>(d2_row.size());
  double d2_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j)
    if (j != self) d2_min = std::min(d2_min, d2_row(j));

  Eigen::VectorXd p = Eigen::VectorXd::Zero(k);
  double sum = 0.0;
  for (int j = 0; j < k; ++j) {
    if (j == self) continue;
    p(j) = std::exp(-beta * (d2_row(j) - d2_min));
    sum += p(j);
  }
  p /= sum;

  double entropy = 0.0;
  for (int j = 0; j < k; ++j)
    if (p(j) > 0) entropy -= p(j) * std::log(p(j));
  return {std::exp(entropy), p};
}

}  // namespace

Eigen::VectorXd preview_features(const State& x, const TsneConfig& config,
                                 const PreviewContext& context, const StateRanges& ranges) {
  const int previews = config.preview_steps / config.preview_stride;
  const double w = config.preview_weight;
  const Eigen::ArrayXd inv_width = ranges.width().array().inverse();

  Eigen::VectorXd f(6 * (1 + previews));
  State current = x;
  bool stopped = hits_ground(x);
  f.segment(0, 6) = (x.array() * inv_width).matrix();
  int written = 1;
  for (int step = 1; step <= config.preview_steps; ++step) {
    if (!stopped) {
      try {
        const Control u = corrective_control(current, context.gain, context.params);
        current = integrate_step(current, u, context.params, context.sim);
      } catch (const SimulationDiverged&) {
        stopped = true;
      }
      if (hits_ground(current)) stopped = true;
    }
    if (step % config.preview_stride == 0)
      f.segment(6 * written++, 6) = w * (current.array() * inv_width).matrix();
  }
  // overall scale: at zero preview length or weight this reproduces the
  // plain range-normalized state distance exactly
  return f / std::sqrt(1.0 + w * w * previews);
}

Eigen::MatrixXd preview_feature_matrix(const std::vector<State>& states, const TsneConfig& config,
                                       const PreviewContext& context, const StateRanges& ranges) {
  const int k = static_cast<int>(states.size());
  const int snapshots = 1 + config.preview_steps / config.preview_stride;
  Eigen::MatrixXd features(k, 6 * snapshots);
  for (int i = 0; i < k; ++i)
    features.row(i) = preview_features(states[i], config, context, ranges).transpose();
  return features;
}

Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& features) {
  const Eigen::VectorXd sq = features.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * features * features.transpose();
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);
  d2.diagonal().setZero();
  return d2;
}

Affinities compute_affinities(const Eigen::MatrixXd& features, double perplexity) {
  const int k = static_cast<int>(features.rows());
  if (k < 3) throw ConfigError("affinities need at least three states");

  const Eigen::MatrixXd d2 = squared_distance_matrix(features);

  Affinities out;
  out.conditional = Eigen::MatrixXd::Zero(k, k);
  out.bandwidths = Eigen::VectorXd::Zero(k);

  for (int i = 0; i < k; ++i) {
    // Bracket the precision, then bisect on the achieved perplexity.
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    RowResult row = row_affinities(d2.row(i), i, beta);
    bool done = std::abs(row.perplexity - perplexity) <= 1e-4;
    for (int iter = 0; iter < 100 && !done; ++iter) {
      if (row.perplexity > perplexity) {
        lo = beta;
        beta = std::isfinite(hi) ? 0.5 * (lo + hi) : beta * 2.0;
      } else {
        hi = beta;
        beta = lo > 0.0 ? 0.5 * (lo + hi) : beta * 0.5;
      }
      row = row_affinities(d2.row(i), i, beta);
      done = std::abs(row.perplexity - perplexity) <= 1e-4;
    }
    if (!done)
      throw CalibrationError("perplexity calibration failed for point " + std::to_string(i));
    out.conditional.row(i) = row.p.transpose();
    out.bandwidths(i) = 1.0 / std::sqrt(2.0 * beta);
  }

  out.joint = (out.conditional + out.conditional.transpose()) / (2.0 * k);
  return out;
}

double tsne_kl(const Eigen::MatrixXd& joint, const Eigen::MatrixXd& y) {
  const int k = static_cast<int>(y.rows());
  Eigen::MatrixXd d2 = squared_distance_matrix(y);

  Eigen::ArrayXXd w = (1.0 + d2.array()).inverse();
  for (int i = 0; i < k; ++i) w(i, i) = 0.0;
  const double sum_w = w.sum();

  double kl = std::log(sum_w);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double p = joint(i, j);
      if (p > 0) kl += p * (std::log(p) - std::log(w(i, j)));
    }
  return kl;
}

Embedding run_tsne(const std::vector<State>& states, const std::vector<int>& labels,
                   const StateRanges& ranges, const TsneConfig& config,
                   const PreviewContext& context) {
  const int k = static_cast<int>(states.size());
  config.validate(k);
  if (k < 3) throw ConfigError("t-SNE needs at least three states");
  if (labels.size() != states.size())
    throw ConfigError("labels and states must have matching sizes");

  Eigen::MatrixXd xs(k, 6);
  for (int i = 0; i < k; ++i) xs.row(i) = states[i].transpose();
  const Eigen::MatrixXd features = preview_feature_matrix(states, config, context, ranges);

  const Affinities aff = compute_affinities(features, config.perplexity);
  const Eigen::MatrixXd& p = aff.joint;

  double p_log_p = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (p(i, j) > 0) p_log_p += p(i, j) * std::log(p(i, j));

  const int d = config.output_dim;
  Rng rng = Rng(config.seed).split(0);
  Eigen::MatrixXd y(k, d);
  for (int i = 0; i < k; ++i)
    for (int c = 0; c < d; ++c) y(i, c) = 0.01 * rng.normal();

  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(k, d);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(k, d);

  std::vector<double> trace;
  trace.reserve(config.iterations);

  for (int iter = 0; iter < config.iterations; ++iter) {
    const double factor = iter < config.exaggeration_iters ? config.exaggeration : 1.0;
    const double momentum =
        iter < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;

    Eigen::MatrixXd d2y = squared_distance_matrix(y);
    Eigen::MatrixXd w = (1.0 + d2y.array()).inverse().matrix();
    w.diagonal().setZero();
    const double sum_w = w.sum();

    // objective against the plain (un-exaggerated) affinities
    double kl = p_log_p + std::log(sum_w);
    kl += (p.array() * (1.0 + d2y.array()).log()).sum();
    if (!std::isfinite(kl)) throw OptimizationFailure("t-SNE objective became non-finite");
    trace.push_back(kl);

    const Eigen::MatrixXd m = ((factor * p - w / sum_w).array() * w.array()).matrix();
    const Eigen::MatrixXd grad = 4.0 * (m.rowwise().sum().asDiagonal() * y - m * y);

    gains = ((grad.array() * velocity.array()) < 0.0)
                .select(gains.array() + 0.2, gains.array() * 0.8)
                .max(0.01)
                .matrix();
    velocity = momentum * velocity - config.learning_rate * gains.cwiseProduct(grad);
    y += velocity;
    y.rowwise() -= y.colwise().mean();
    if (!y.allFinite()) throw OptimizationFailure("t-SNE coordinates became non-finite");
  }

  Embedding emb;
  emb.source_states = xs;
  emb.features = features;
  emb.points = y;
  emb.bandwidths = aff.bandwidths;
  emb.labels = labels;
  emb.ranges = ranges;
  emb.config = config;
  emb.context = context;
  emb.final_kl = tsne_kl(p, y);
  trace.push_back(emb.final_kl);
  emb.kl_trace = std::move(trace);
  return emb;
}

double loo_knn_accuracy(const Embedding& embedding, int neighbors) {
  const int k = embedding.size();
  if (k < neighbors + 1) throw ConfigError("not enough points for leave-one-out evaluation");

  long correct = 0;
  std::vector<std::pair<double, int>> d(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j)
      d[j] = {(embedding.points.row(j) - embedding.points.row(i)).squaredNorm(), j};
    d[i].first = std::numeric_limits<double>::infinity();
    std::nth_element(d.begin(), d.begin() + neighbors, d.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    int votes = 0;
    for (int n = 0; n < neighbors; ++n) votes += embedding.labels[d[n].second];
    const int predicted = 2 * votes > neighbors ? 1 : 0;
    correct += predicted == embedding.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / k;
}

Eigen::VectorXd map_state(const State& x, const Embedding& embedding, const StateRanges& ranges) {
  const int k = embedding.size();
  const Eigen::VectorXd f = preview_features(x, embedding.config, embedding.context, ranges);
  Eigen::VectorXd d(k);
  for (int i = 0; i < k; ++i) d(i) = (embedding.features.row(i).transpose() - f).norm();

  int nearest = 0;
  d.minCoeff(&nearest);
  if (d(nearest) < 1e-12) return embedding.points.row(nearest).transpose();

  // Nadaraya-Watson with the calibrated bandwidths; exponents are shifted so
  // the weight of the nearest point is 1 and the sum cannot underflow.
  Eigen::ArrayXd e(k);
  for (int i = 0; i < k; ++i) {
    const double s = embedding.bandwidths(i);
    e(i) = -d(i) * d(i) / (2.0 * s * s);
  }
  const double e_max = e.maxCoeff();
  if (!std::isfinite(e_max)) return embedding.points.row(nearest).transpose();

  const Eigen::ArrayXd wgt = (e - e_max).exp();
  const double total = wgt.sum();
  return (embedding.points.transpose() * wgt.matrix()) / total;
}

}  // namespace srl
