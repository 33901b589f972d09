#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "srl/rng.hpp"
#include "srl/types.hpp"

namespace srl {

struct PolicyConfig {
  int hidden = 128;  // two hidden layers of this width, tanh
  int steps_per_update = 2048;
  int epochs = 10;
  int minibatches = 128;
  double learning_rate = 1e-4;
  double discount = 0.99;
  double gae_lambda = 0.95;
  double value_coef = 1.0;
  double grad_clip = 10.0;
  double entropy_coef = 0.0;
  double clip_range = 0.2;
  int episode_horizon = 500;  // control steps
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden < 1 || steps_per_update < 1 || epochs < 1 || minibatches < 1)
      throw ConfigError("policy sizes must be positive");
    if (steps_per_update % minibatches != 0)
      throw ConfigError("steps_per_update must be divisible by minibatches");
    if (!(learning_rate > 0) || !(grad_clip > 0) || !(clip_range > 0))
      throw ConfigError("learning rate, grad clip and clip range must be positive");
    if (!(discount > 0 && discount <= 1) || !(gae_lambda >= 0 && gae_lambda <= 1))
      throw ConfigError("discount factors must lie in (0, 1]");
    if (episode_horizon < 1) throw ConfigError("episode horizon must be positive");
  }
};

// Diagonal-Gaussian policy with a state-independent learnable log-stddev and
// a separate value head. Both networks are two tanh layers; all parameters
// live in one flat vector so optimizer steps, norm clipping and
// finite-difference checks operate uniformly.
class GaussianPolicy {
 public:
  GaussianPolicy(int obs_dim, int act_dim, int hidden, Rng& rng);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  Eigen::VectorXd actor_mean(const Eigen::VectorXd& obs) const;
  double value(const Eigen::VectorXd& obs) const;
  Eigen::VectorXd log_std() const;

  // Draw an action; returns the raw (unsaturated) action and its log-density.
  std::pair<Eigen::VectorXd, double> sample_action(const Eigen::VectorXd& obs, Rng& rng) const;

  double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const;

  struct Batch {
    Eigen::MatrixXd obs;      // obs_dim x M
    Eigen::MatrixXd actions;  // act_dim x M
    Eigen::VectorXd old_logp;
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;
  };

  // Clipped-surrogate objective plus weighted value and entropy terms.
  double loss(const Batch& batch, const PolicyConfig& cfg) const;
  std::pair<double, Eigen::VectorXd> loss_and_grad(const Batch& batch,
                                                   const PolicyConfig& cfg) const;

  const Eigen::VectorXd& params() const { return theta_; }
  void set_params(const Eigen::VectorXd& theta);
  int param_count() const { return static_cast<int>(theta_.size()); }

 private:
  struct Net {
    int w1, b1, w2, b2, w3, b3;  // offsets into theta_
  };

  int obs_dim_, act_dim_, hidden_;
  Net actor_, critic_;
  int log_std_off_;
  Eigen::VectorXd theta_;
};

// Max relative error between analytic and central finite-difference gradients
// of the total loss, with relative error |ga - gf| / max(1, |gf|).
double policy_gradient_check(const GaussianPolicy& policy, const GaussianPolicy::Batch& batch,
                             const PolicyConfig& cfg, double fd_step = 1e-5);

class Adam {
 public:
  Adam(int dim, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr);

 private:
  Eigen::VectorXd m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Scale the gradient so its Euclidean norm does not exceed the cap.
void clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

// Generalized advantage estimation over a flat batch with done flags;
// bootstrap_value is used past the last entry when the episode is unfinished.
void compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                 const std::vector<std::uint8_t>& done, double bootstrap_value, double discount,
                 double lambda, Eigen::VectorXd& advantages, Eigen::VectorXd& returns);

}  // namespace srl
