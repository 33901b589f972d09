#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "srl/corrective.hpp"
#include "srl/datagen.hpp"
#include "srl/embedding.hpp"
#include "srl/policy.hpp"
#include "srl/types.hpp"

namespace srl {

// Everything one experiment needs, loadable from a single JSON file. Paper
// defaults throughout; any field may be overridden from the file or the
// command line.
struct ExperimentConfig {
  PendulumParams pendulum;          // delta selects the real system
  SimConfig sim;
  StateRanges ranges = StateRanges::defaults();
  int dataset_k = 1000;
  double alpha = 0.5;
  std::uint64_t data_seed = 12345;
  int rollout_episodes = 200;
  int rollout_steps = 300;
  TsneConfig tsne;
  double p_t = 0.8;
  double gamma_bandwidth = 0.0;  // 0 selects the default bandwidth
  double gamma_prior = 1.0;      // unsafe pseudo-weight in the assessment
  Eigen::Matrix<double, 6, 1> lqr_q_diag = (State() << 10, 10, 10, 1, 1, 1).finished();
  double lqr_r_scale = 10.0;
  RecoverySettings recovery;
  PolicyConfig policy;
  long total_steps = 100000;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "out";

  DatasetSpec dataset_spec() const {
    DatasetSpec s;
    s.k = dataset_k;
    s.alpha = alpha;
    s.seed = data_seed;
    s.ranges = ranges;
    return s;
  }

  LqrWeights lqr_weights() const {
    LqrWeights w;
    w.Q = lqr_q_diag.asDiagonal();
    w.R = lqr_r_scale * Eigen::Matrix3d::Identity();
    return w;
  }

  RecoverySettings recovery_settings() const {
    RecoverySettings r = recovery;
    r.ranges = ranges;
    return r;
  }

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Apply a dotted-path override such as "dataset.alpha=0.5" to a JSON
// document; the value is parsed as JSON when possible, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace srl
