#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "srl/corrective.hpp"
#include "srl/policy.hpp"
#include "srl/safe_region.hpp"
#include "srl/types.hpp"

namespace srl {

// Desired end-effector position: a circle of radius 0.3 around (0, 2.7),
// one revolution every two seconds, starting at the top.
Eigen::Vector2d target_position(double t);

// R(t) = 2 - 10 * distance(end effector, target).
double reward(const State& x, double t, const PendulumParams& params);

// Observation fed to the learner: the raw state plus the target phase.
Eigen::VectorXd observe(const State& x, long step, double dt_control);
inline constexpr int kObsDim = 8;

enum class Termination { horizon, predicted_unsafe, constraint_violated };
enum class RecoveryResult { not_triggered, success, failure };

struct EpisodeRecord {
  double cumulative_reward = 0.0;
  int steps = 0;  // policy steps
  Termination cause = Termination::horizon;
  RecoveryResult recovery = RecoveryResult::not_triggered;
  long t_prime = -1;  // first predicted-unsafe step, -1 if never triggered
};

using SafetyPredictor = std::function<int(const State&)>;

// One control period of the switching supervisor: the policy torque is
// applied until the first step at which the predictor rejects the state;
// from then on the corrective controller acts for the rest of the episode,
// regardless of later predictions.
struct SupervisorState {
  bool triggered = false;
  long t_prime = -1;
};
struct SupervisedStepResult {
  State next;
  char controller;  // 'p' policy, 'k' corrective
};
SupervisedStepResult supervised_step(const State& x, long step, SupervisorState& sup,
                                     const SafetyPredictor& predictor,
                                     const Control& policy_torque, const FeedbackGain& gain,
                                     const PendulumParams& params, const SimConfig& config);

struct MetricsRow {
  int update = 0;
  long env_steps = 0;
  double mean_reward = 0.0;  // over episodes completed during the update
  long activations = 0;      // cumulative
  long failures = 0;
  long violations = 0;
};

struct LearningMetrics {
  std::vector<MetricsRow> rows;
  std::vector<EpisodeRecord> episodes;
  long activations = 0;
  long failures = 0;               // failed recoveries among activated episodes
  long failures_violation = 0;     // recovery reached the ground
  long failures_nonconverged = 0;  // recovery ran out its horizon
  long violations = 0;             // raw ground hits
};

// Supervisor used during training: the hypothesis for prediction plus the
// corrective gain for recovery.
struct Supervisor {
  const SafeRegionModel* model = nullptr;
  FeedbackGain gain;
  RecoverySettings recovery;
};

struct StepLogEntry {
  long episode;
  int step;
  State state;  // state at which the policy acted
};

struct TrainOptions {
  bool record_step_log = false;
  StateRanges ranges = StateRanges::defaults();
};

struct TrainResult {
  LearningMetrics metrics;
  Eigen::VectorXd policy_params;
  PolicyConfig config;
  std::vector<StepLogEntry> step_log;
};

// Clipped-surrogate policy-gradient training on the real system, under the
// switching supervisor when one is given; without one, episodes end (and a
// violation is counted) when the first link reaches the ground.
// Deterministic for a fixed seed. Throws TrainingFailure on non-finite loss.
TrainResult train(const PolicyConfig& cfg, const std::optional<Supervisor>& supervisor,
                  const PendulumParams& params_real, const SimConfig& sim, long total_steps,
                  std::uint64_t seed, const TrainOptions& options = {});

}  // namespace srl
