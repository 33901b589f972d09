#pragma once

#include "srl/embedding.hpp"
#include "srl/types.hpp"

namespace srl {

// The learned simplified safe region: a labeled embedding, a smoothing
// bandwidth in the simplified space and the probability threshold. The prior
// weight is an unsafe pseudo-observation: a state counts as safe only when
// enough nearby training evidence says so, which is what keeps sparsely
// sampled territory conservative.
struct SafeRegionModel {
  Embedding embedding;
  double gamma_bandwidth = 0.0;
  double p_t = 0.8;
  double prior_weight = 1.0;

  // Validates the threshold, bandwidth and the presence of both label
  // classes. A bandwidth of zero selects the default (2% of the embedded
  // bounding-box diagonal).
  static SafeRegionModel create(Embedding embedding, double bandwidth, double p_t,
                                double prior_weight = 1.0);

  static double default_bandwidth(const Embedding& embedding);
};

// Kernel-smoothed safe-label frequency at a simplified state, in [0, 1]:
// sum(w z) / (sum(w) + prior). With a zero prior this is the plain
// kernel-frequency ratio, which falls back to the nearest point's label when
// every weight underflows; with a positive prior unsupported queries tend to
// zero instead.
double gamma(const Eigen::VectorXd& y, const SafeRegionModel& model);

// Hypothesis h: 1 iff gamma(map_state(x)) strictly exceeds p_t.
int predict(const State& x, const SafeRegionModel& model, const StateRanges& ranges);

struct RegionGrid {
  Eigen::VectorXd axis1;  // grid coordinates along the first embedded axis
  Eigen::VectorXd axis2;
  Eigen::MatrixXd values;  // gamma, values(i, j) at (axis1(i), axis2(j))
};

// Gamma sampled over the embedded bounding box inflated by 10%. Only defined
// for two-dimensional embeddings.
RegionGrid region_grid(const SafeRegionModel& model, int resolution);

}  // namespace srl
