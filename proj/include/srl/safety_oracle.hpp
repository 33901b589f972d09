#pragma once

#include <vector>

#include "srl/corrective.hpp"
#include "srl/types.hpp"

namespace srl {

// Euclidean distance after dividing each dimension by its range width.
double normalized_distance(const State& a, const State& b, const StateRanges& ranges);

// Binary safety label by simulation: 1 iff the corrective controller recovers
// the system (given by params) from the state. Ground-hit states are 0
// immediately; simulation faults are 0.
int label_state(const State& x, const PendulumParams& params, const FeedbackGain& gain,
                const SimConfig& config, const RecoverySettings& settings = {});

std::vector<LabeledSample> label_batch(const std::vector<State>& states,
                                       const PendulumParams& params, const FeedbackGain& gain,
                                       const SimConfig& config,
                                       const RecoverySettings& settings = {});

}  // namespace srl
