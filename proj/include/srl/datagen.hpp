#pragma once

#include <cstdint>
#include <vector>

#include "srl/rng.hpp"
#include "srl/safety_oracle.hpp"
#include "srl/types.hpp"

namespace srl {

// Multivariate normal fitted to random-policy rollout states.
struct MndModel {
  State mean = State::Zero();
  Matrix6d covariance = Matrix6d::Identity();
};

struct DatasetSpec {
  int k = 1000;           // total training samples
  double alpha = 0.5;     // uniform-distribution share, in [0, 1]
  std::uint64_t seed = 0;
  StateRanges ranges = StateRanges::defaults();

  void validate() const {
    if (k < 1) throw ConfigError("dataset size k must be at least 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    ranges.validate();
  }
};

enum class Provenance { ud, mnd };

struct TrainingSample {
  State state;
  int label = 0;
  Provenance provenance = Provenance::ud;
};

// Independent uniform draws per dimension.
std::vector<State> sample_ud(int count, const StateRanges& ranges, Rng& rng);

// Random-policy episodes from the origin; torques resampled uniformly every
// control step; an episode ends early when the first link reaches the ground.
// Every visited state is recorded, including the terminal one.
std::vector<State> collect_rollouts(const PendulumParams& params, const SimConfig& config,
                                    int n_episodes, int episode_len, Rng& rng);

// Sample mean and unbiased covariance, ridge-regularized with 1e-8 I.
MndModel fit_mnd(const std::vector<State>& x);

// Cholesky-based draws, rejected until inside the ranges (cap 1000 per sample).
std::vector<State> sample_mnd(const MndModel& model, int count, const StateRanges& ranges,
                              Rng& rng);

// D_tr: round(alpha k) uniform samples followed by the multivariate-normal
// remainder, all labeled on the system given by params.
std::vector<TrainingSample> build_dataset(const DatasetSpec& spec, const MndModel& mnd,
                                          const PendulumParams& params, const FeedbackGain& gain,
                                          const SimConfig& config,
                                          const RecoverySettings& recovery = {});

// Number of uniform-distribution samples for a given spec (round half up).
int ud_count(const DatasetSpec& spec);

}  // namespace srl
