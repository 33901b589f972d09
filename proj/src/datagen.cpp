#include "srl/datagen.hpp"

#include <cmath>

#include "srl/dynamics.hpp"

namespace srl {

std::vector<State> sample_ud(int count, const StateRanges& ranges, Rng& rng) {
  std::vector<State> out;
  out.reserve(std::max(count, 0));
  for (int i = 0; i < count; ++i) {
    State x;
    for (int d = 0; d < 6; ++d) x(d) = rng.uniform(ranges.lower(d), ranges.upper(d));
    out.push_back(x);
  }
  return out;
}

std::vector<State> collect_rollouts(const PendulumParams& params, const SimConfig& config,
                                    int n_episodes, int episode_len, Rng& rng) {
  std::vector<State> out;
  for (int ep = 0; ep < n_episodes; ++ep) {
    State x = State::Zero();
    out.push_back(x);
    for (int step = 0; step < episode_len; ++step) {
      Control u;
      for (int i = 0; i < 3; ++i) u(i) = rng.uniform(params.u_min, params.u_max);
      try {
        x = integrate_step(x, saturate(u, params), params, config);
      } catch (const SimulationDiverged&) {
        break;
      }
      out.push_back(x);
      if (hits_ground(x)) break;
    }
  }
  return out;
}

MndModel fit_mnd(const std::vector<State>& x) {
  if (x.size() < 2) throw InsufficientData("fit_mnd requires at least two states");
  const double n = static_cast<double>(x.size());

  MndModel m;
  m.mean = State::Zero();
  for (const State& s : x) m.mean += s;
  m.mean /= n;

  Matrix6d cov = Matrix6d::Zero();
  for (const State& s : x) {
    const State d = s - m.mean;
    cov += d * d.transpose();
  }
  m.covariance = cov / (n - 1.0) + 1e-8 * Matrix6d::Identity();
  return m;
}

std::vector<State> sample_mnd(const MndModel& model, int count, const StateRanges& ranges,
                              Rng& rng) {
  Eigen::LLT<Matrix6d> llt(model.covariance);
  if (llt.info() != Eigen::Success)
    throw DegenerateModel("mnd covariance is not positive definite");
  const Matrix6d chol = llt.matrixL();

  std::vector<State> out;
  out.reserve(std::max(count, 0));
  for (int i = 0; i < count; ++i) {
    bool accepted = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      State z;
      for (int d = 0; d < 6; ++d) z(d) = rng.normal();
      const State x = model.mean + chol * z;
      if (ranges.contains(x)) {
        out.push_back(x);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw DegenerateModel("mnd sampling exceeded the rejection budget");
  }
  return out;
}

int ud_count(const DatasetSpec& spec) {
  return static_cast<int>(std::floor(spec.alpha * spec.k + 0.5));
}

std::vector<TrainingSample> build_dataset(const DatasetSpec& spec, const MndModel& mnd,
                                          const PendulumParams& params, const FeedbackGain& gain,
                                          const SimConfig& config,
                                          const RecoverySettings& recovery) {
  spec.validate();
  const int n_ud = ud_count(spec);
  const int n_mnd = spec.k - n_ud;

  Rng master(spec.seed);
  Rng rng_ud = master.split(1);
  Rng rng_mnd = master.split(2);

  std::vector<State> states = sample_ud(n_ud, spec.ranges, rng_ud);
  const std::vector<State> tail = sample_mnd(mnd, n_mnd, spec.ranges, rng_mnd);
  states.insert(states.end(), tail.begin(), tail.end());

  const std::vector<LabeledSample> labeled = label_batch(states, params, gain, config, recovery);

  std::vector<TrainingSample> out;
  out.reserve(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i)
    out.push_back({labeled[i].state, labeled[i].label,
                   static_cast<int>(i) < n_ud ? Provenance::ud : Provenance::mnd});
  return out;
}

}  // namespace srl
