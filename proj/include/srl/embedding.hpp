#pragma once

#include <cstdint>
#include <vector>

#include "srl/corrective.hpp"
#include "srl/types.hpp"

namespace srl {

struct TsneConfig {
  double perplexity = 30.0;
  int output_dim = 2;
  int iterations = 1000;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  int exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  // Similarities compare the state together with a short closed-loop
  // recovery preview: preview_steps control periods under the corrective
  // controller, one snapshot every preview_stride steps, each snapshot
  // entering the distance with weight preview_weight relative to the state
  // itself. Zero steps (or zero weight) reduces to the plain
  // range-normalized state distance.
  int preview_steps = 100;
  int preview_stride = 10;
  double preview_weight = 0.25;
  std::uint64_t seed = 0;

  void validate(int k) const {
    if (!(perplexity > 1.0 && perplexity < static_cast<double>(k)))
      throw ConfigError("perplexity must lie in (1, k)");
    if (output_dim < 1) throw ConfigError("output_dim must be at least 1");
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
    if (preview_steps < 0 || preview_stride < 1)
      throw ConfigError("preview lengths must be non-negative");
    if (preview_steps % preview_stride != 0)
      throw ConfigError("preview_steps must be a multiple of preview_stride");
    if (!(preview_weight >= 0.0)) throw ConfigError("preview weight must be non-negative");
  }
};

// Everything the similarity computation needs about the plant: the nominal
// closed loop that generates recovery previews.
struct PreviewContext {
  FeedbackGain gain;
  PendulumParams params;  // nominal system
  SimConfig sim;
};

// A realization of simplified states for one training dataset, together with
// everything needed to map new states into the same space.
struct Embedding {
  Eigen::MatrixXd source_states;  // k x 6
  Eigen::MatrixXd features;       // k x f, range-normalized preview snapshots
  Eigen::MatrixXd points;         // k x output_dim
  Eigen::VectorXd bandwidths;     // per-point Gaussian widths from calibration
  std::vector<int> labels;        // k safety labels
  StateRanges ranges = StateRanges::defaults();
  TsneConfig config;
  PreviewContext context;
  double final_kl = 0.0;
  std::vector<double> kl_trace;  // objective per iteration; not serialized

  int size() const { return static_cast<int>(points.rows()); }
};

struct Affinities {
  Eigen::MatrixXd conditional;  // row-stochastic p_{j|i}
  Eigen::MatrixXd joint;        // symmetrized p_ij, sums to 1
  Eigen::VectorXd bandwidths;   // sigma_i
};

// Recovery-preview feature vector of one state: the closed-loop trajectory
// sampled every preview_stride control steps, each snapshot divided by the
// range widths, the whole vector scaled so that its Euclidean norm matches
// the per-snapshot normalized state distance on average. The preview holds
// the last state after a ground hit, convergence or integration fault.
Eigen::VectorXd preview_features(const State& x, const TsneConfig& config,
                                 const PreviewContext& context, const StateRanges& ranges);

Eigen::MatrixXd preview_feature_matrix(const std::vector<State>& states, const TsneConfig& config,
                                       const PreviewContext& context, const StateRanges& ranges);

// Pairwise squared Euclidean distances between feature rows.
Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& features);

// Gaussian affinities with per-point bandwidths calibrated by bisection so
// that each row's perplexity matches the target within 1e-4. Throws
// CalibrationError naming the point when bisection cannot converge.
Affinities compute_affinities(const Eigen::MatrixXd& features, double perplexity);

// KL divergence between the joint input affinities and the Student-t
// affinities of the given embedding coordinates.
double tsne_kl(const Eigen::MatrixXd& joint, const Eigen::MatrixXd& y);

// Exact-gradient t-SNE with early exaggeration, momentum schedule and
// adaptive per-coordinate gains. Deterministic for a fixed seed.
Embedding run_tsne(const std::vector<State>& states, const std::vector<int>& labels,
                   const StateRanges& ranges, const TsneConfig& config,
                   const PreviewContext& context);

// Out-of-sample state mapping: exact match returns the stored point, anything
// else the kernel-weighted average of the training points under the
// calibration bandwidths. Never fails.
Eigen::VectorXd map_state(const State& x, const Embedding& embedding, const StateRanges& ranges);

// Leave-one-out k-nearest-neighbor label accuracy in the embedded space; the
// quantitative surrogate for class separation quality.
double loo_knn_accuracy(const Embedding& embedding, int neighbors = 5);

}  // namespace srl
