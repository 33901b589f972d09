#include "srl/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "srl/dynamics.hpp"

namespace srl {

Eigen::Vector2d target_position(double t) {
  return {0.3 * std::sin(kPi * t), 2.7 + 0.3 * std::cos(kPi * t)};
}

double reward(const State& x, double t, const PendulumParams& params) {
  return 2.0 - 10.0 * (forward_kinematics(x, params) - target_position(t)).norm();
}

Eigen::VectorXd observe(const State& x, long step, double dt_control) {
  Eigen::VectorXd obs(kObsDim);
  obs.head<6>() = x;
  const double phase = kPi * static_cast<double>(step) * dt_control;
  obs(6) = std::sin(phase);
  obs(7) = std::cos(phase);
  return obs;
}

SupervisedStepResult supervised_step(const State& x, long step, SupervisorState& sup,
                                     const SafetyPredictor& predictor,
                                     const Control& policy_torque, const FeedbackGain& gain,
                                     const PendulumParams& params, const SimConfig& config) {
  if (!sup.triggered && predictor(x) == 0) {
    sup.triggered = true;
    sup.t_prime = step;
  }
  SupervisedStepResult out;
  if (sup.triggered) {
    out.controller = 'k';
    out.next = integrate_step(x, corrective_control(x, gain, params), params, config);
  } else {
    out.controller = 'p';
    out.next = integrate_step(x, saturate(policy_torque, params), params, config);
  }
  return out;
}

namespace {

struct RecoveryTag {
  RecoveryResult result;
  bool violation;
};

RecoveryTag run_recovery(const State& from, const Supervisor& sup, const PendulumParams& params,
                         const SimConfig& sim) {
  const RecoveryOutcome rec = recovery_rollout(from, sup.gain, params, sim, sup.recovery);
  if (rec.success) return {RecoveryResult::success, false};
  return {RecoveryResult::failure, rec.violation};
}

}  // namespace

TrainResult train(const PolicyConfig& cfg, const std::optional<Supervisor>& supervisor,
                  const PendulumParams& params_real, const SimConfig& sim, long total_steps,
                  std::uint64_t seed, const TrainOptions& options) {
  cfg.validate();
  params_real.validate();
  sim.validate();
  if (total_steps < 1) throw ConfigError("total_steps must be positive");

  SafetyPredictor predictor;
  if (supervisor) {
    const SafeRegionModel* model = supervisor->model;
    if (model == nullptr) throw ConfigError("supervisor requires a safe-region model");
    const StateRanges ranges = options.ranges;
    predictor = [model, ranges](const State& s) { return predict(s, *model, ranges); };
  }

  Rng master(seed);
  Rng rng_init = master.split(0);
  Rng rng_act = master.split(1);
  Rng rng_shuffle = master.split(2);

  GaussianPolicy policy(kObsDim, 3, cfg.hidden, rng_init);
  Adam adam(policy.param_count());

  const double action_scale = std::max(std::abs(params_real.u_max), std::abs(params_real.u_min));
  const int t_batch = cfg.steps_per_update;
  const int minibatch = cfg.steps_per_update / cfg.minibatches;
  const int n_updates = static_cast<int>((total_steps + t_batch - 1) / t_batch);

  TrainResult result;
  result.config = cfg;
  LearningMetrics& metrics = result.metrics;

  // episode state
  State x = State::Zero();
  long ep_index = 0;
  int ep_step = 0;
  double ep_reward = 0.0;

  if (supervisor && predictor(x) == 0)
    throw TrainingFailure("reset state is predicted unsafe; supervised learning cannot start");

  // flat rollout buffers
  Eigen::MatrixXd obs_buf(kObsDim, t_batch);
  Eigen::MatrixXd act_buf(3, t_batch);
  Eigen::VectorXd logp_buf(t_batch), rew_buf(t_batch), val_buf(t_batch);
  std::vector<std::uint8_t> done_buf(t_batch);

  auto finish_episode = [&](Termination cause, RecoveryResult rec, long t_prime,
                            std::vector<double>& completed) {
    metrics.episodes.push_back({ep_reward, ep_step, cause, rec, t_prime});
    completed.push_back(ep_reward);
    x = State::Zero();
    ep_step = 0;
    ep_reward = 0.0;
    ++ep_index;
  };

  for (int update = 0; update < n_updates; ++update) {
    std::vector<double> completed;
    for (int i = 0; i < t_batch; ++i) {
      const Eigen::VectorXd obs = observe(x, ep_step, sim.dt_control);
      const auto [raw_action, logp] = policy.sample_action(obs, rng_act);
      const double value = policy.value(obs);

      const Control torque = saturate(action_scale * raw_action, params_real);
      State x_next;
      bool diverged = false;
      try {
        x_next = integrate_step(x, torque, params_real, sim);
      } catch (const SimulationDiverged&) {
        diverged = true;
        x_next = x;
      }
      if (options.record_step_log) result.step_log.push_back({ep_index, ep_step, x});

      const double r = diverged ? 0.0
                                : reward(x_next, (ep_step + 1) * sim.dt_control, params_real);

      obs_buf.col(i) = obs;
      act_buf.col(i) = raw_action;
      logp_buf(i) = logp;
      val_buf(i) = value;
      rew_buf(i) = r;

      bool done = true;
      ++ep_step;
      ep_reward += r;
      if (diverged || hits_ground(x_next)) {
        // raw ground hit (or crash): the supervisor missed; the recovery is
        // still attempted and recorded, but only the violations counter moves
        ++metrics.violations;
        RecoveryResult rec = RecoveryResult::not_triggered;
        if (supervisor)
          rec = diverged ? RecoveryResult::failure
                         : run_recovery(x_next, *supervisor, params_real, sim).result;
        finish_episode(Termination::constraint_violated, rec, ep_step, completed);
      } else if (supervisor && predictor(x_next) == 0) {
        ++metrics.activations;
        const RecoveryTag rec = run_recovery(x_next, *supervisor, params_real, sim);
        if (rec.result == RecoveryResult::failure) {
          ++metrics.failures;
          if (rec.violation)
            ++metrics.failures_violation;
          else
            ++metrics.failures_nonconverged;
        }
        finish_episode(Termination::predicted_unsafe, rec.result, ep_step, completed);
      } else if (ep_step >= cfg.episode_horizon) {
        finish_episode(Termination::horizon, RecoveryResult::not_triggered, -1, completed);
      } else {
        done = false;
        x = x_next;
      }
      done_buf[i] = done ? 1 : 0;
    }

    const double bootstrap =
        done_buf[t_batch - 1] ? 0.0 : policy.value(observe(x, ep_step, sim.dt_control));
    Eigen::VectorXd advantages, returns;
    compute_gae(rew_buf, val_buf, done_buf, bootstrap, cfg.discount, cfg.gae_lambda, advantages,
                returns);

    std::vector<int> order(t_batch);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng_shuffle.shuffle(order);
      for (int mb = 0; mb < cfg.minibatches; ++mb) {
        GaussianPolicy::Batch batch;
        batch.obs.resize(kObsDim, minibatch);
        batch.actions.resize(3, minibatch);
        batch.old_logp.resize(minibatch);
        batch.advantages.resize(minibatch);
        batch.returns.resize(minibatch);
        for (int j = 0; j < minibatch; ++j) {
          const int idx = order[mb * minibatch + j];
          batch.obs.col(j) = obs_buf.col(idx);
          batch.actions.col(j) = act_buf.col(idx);
          batch.old_logp(j) = logp_buf(idx);
          batch.advantages(j) = advantages(idx);
          batch.returns(j) = returns(idx);
        }
        const double mean_adv = batch.advantages.mean();
        const double std_adv = std::sqrt((batch.advantages.array() - mean_adv).square().mean());
        batch.advantages = (batch.advantages.array() - mean_adv) / (std_adv + 1e-8);

        auto [loss, grad] = policy.loss_and_grad(batch, cfg);
        if (!std::isfinite(loss))
          throw TrainingFailure("non-finite loss at update " + std::to_string(update) +
                                ", epoch " + std::to_string(epoch));
        clip_grad_norm(grad, cfg.grad_clip);
        Eigen::VectorXd theta = policy.params();
        adam.step(theta, grad, cfg.learning_rate);
        policy.set_params(theta);
      }
    }

    MetricsRow row;
    row.update = update;
    row.env_steps = static_cast<long>(update + 1) * t_batch;
    row.mean_reward =
        completed.empty()
            ? 0.0
            : std::accumulate(completed.begin(), completed.end(), 0.0) / completed.size();
    row.activations = metrics.activations;
    row.failures = metrics.failures;
    row.violations = metrics.violations;
    metrics.rows.push_back(row);
  }

  result.policy_params = policy.params();
  return result;
}

}  // namespace srl
