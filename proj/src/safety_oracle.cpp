#include "srl/safety_oracle.hpp"

namespace srl {

double normalized_distance(const State& a, const State& b, const StateRanges& ranges) {
  return ((a - b).array() / ranges.width().array()).matrix().norm();
}

int label_state(const State& x, const PendulumParams& params, const FeedbackGain& gain,
                const SimConfig& config, const RecoverySettings& settings) {
  if (hits_ground(x)) return 0;
  try {
    return recovery_rollout(x, gain, params, config, settings).success ? 1 : 0;
  } catch (const SimulationDiverged&) {
    return 0;
  }
}

std::vector<LabeledSample> label_batch(const std::vector<State>& states,
                                       const PendulumParams& params, const FeedbackGain& gain,
                                       const SimConfig& config,
                                       const RecoverySettings& settings) {
  std::vector<LabeledSample> out;
  out.reserve(states.size());
  for (const State& x : states)
    out.push_back({x, label_state(x, params, gain, config, settings)});
  return out;
}

}  // namespace srl
