#include "srl/policy.hpp"

#include <algorithm>
#include <cmath>

namespace srl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Map<const MatrixXd> mat(const VectorXd& v, int off, int rows, int cols) {
  return {v.data() + off, rows, cols};
}
Map<const VectorXd> vec(const VectorXd& v, int off, int n) { return {v.data() + off, n}; }
Map<MatrixXd> mat(VectorXd& v, int off, int rows, int cols) {
  return {v.data() + off, rows, cols};
}
Map<VectorXd> vec(VectorXd& v, int off, int n) { return {v.data() + off, n}; }

}  // namespace

GaussianPolicy::GaussianPolicy(int obs_dim, int act_dim, int hidden, Rng& rng)
    : obs_dim_(obs_dim), act_dim_(act_dim), hidden_(hidden) {
  auto layout = [&](int out_dim, int& cursor) {
    Net n;
    n.w1 = cursor, cursor += hidden_ * obs_dim_;
    n.b1 = cursor, cursor += hidden_;
    n.w2 = cursor, cursor += hidden_ * hidden_;
    n.b2 = cursor, cursor += hidden_;
    n.w3 = cursor, cursor += out_dim * hidden_;
    n.b3 = cursor, cursor += out_dim;
    return n;
  };
  int cursor = 0;
  actor_ = layout(act_dim_, cursor);
  critic_ = layout(1, cursor);
  log_std_off_ = cursor;
  cursor += act_dim_;
  theta_ = VectorXd::Zero(cursor);

  auto init = [&](int off, int rows, int cols, double scale) {
    auto w = mat(theta_, off, rows, cols);
    const double std = scale * std::sqrt(2.0 / (rows + cols));
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) w(r, c) = std * rng.normal();
  };
  init(actor_.w1, hidden_, obs_dim_, 1.0);
  init(actor_.w2, hidden_, hidden_, 1.0);
  init(actor_.w3, act_dim_, hidden_, 0.01);  // small head keeps early actions near zero
  init(critic_.w1, hidden_, obs_dim_, 1.0);
  init(critic_.w2, hidden_, hidden_, 1.0);
  init(critic_.w3, 1, hidden_, 1.0);
}

void GaussianPolicy::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) throw ConfigError("parameter vector size mismatch");
  theta_ = theta;
}

Eigen::VectorXd GaussianPolicy::log_std() const {
  return vec(theta_, log_std_off_, act_dim_);
}

Eigen::VectorXd GaussianPolicy::actor_mean(const Eigen::VectorXd& obs) const {
  const VectorXd a1 =
      ((mat(theta_, actor_.w1, hidden_, obs_dim_) * obs + vec(theta_, actor_.b1, hidden_)))
          .array()
          .tanh()
          .matrix();
  const VectorXd a2 =
      ((mat(theta_, actor_.w2, hidden_, hidden_) * a1 + vec(theta_, actor_.b2, hidden_)))
          .array()
          .tanh()
          .matrix();
  return mat(theta_, actor_.w3, act_dim_, hidden_) * a2 + vec(theta_, actor_.b3, act_dim_);
}

double GaussianPolicy::value(const Eigen::VectorXd& obs) const {
  const VectorXd a1 =
      ((mat(theta_, critic_.w1, hidden_, obs_dim_) * obs + vec(theta_, critic_.b1, hidden_)))
          .array()
          .tanh()
          .matrix();
  const VectorXd a2 =
      ((mat(theta_, critic_.w2, hidden_, hidden_) * a1 + vec(theta_, critic_.b2, hidden_)))
          .array()
          .tanh()
          .matrix();
  return (mat(theta_, critic_.w3, 1, hidden_) * a2)(0) + theta_(critic_.b3);
}

std::pair<Eigen::VectorXd, double> GaussianPolicy::sample_action(const Eigen::VectorXd& obs,
                                                                 Rng& rng) const {
  const VectorXd mean = actor_mean(obs);
  const VectorXd ls = log_std();
  VectorXd action(act_dim_);
  double logp = -0.5 * act_dim_ * kLog2Pi - ls.sum();
  for (int i = 0; i < act_dim_; ++i) {
    const double z = rng.normal();
    action(i) = mean(i) + std::exp(ls(i)) * z;
    logp -= 0.5 * z * z;
  }
  return {action, logp};
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const {
  const VectorXd mean = actor_mean(obs);
  const VectorXd ls = log_std();
  double logp = -0.5 * act_dim_ * kLog2Pi - ls.sum();
  for (int i = 0; i < act_dim_; ++i) {
    const double z = (action(i) - mean(i)) / std::exp(ls(i));
    logp -= 0.5 * z * z;
  }
  return logp;
}

double GaussianPolicy::loss(const Batch& batch, const PolicyConfig& cfg) const {
  return loss_and_grad(batch, cfg).first;
}

std::pair<double, Eigen::VectorXd> GaussianPolicy::loss_and_grad(const Batch& batch,
                                                                 const PolicyConfig& cfg) const {
  const int m = static_cast<int>(batch.obs.cols());
  const double inv_m = 1.0 / m;

  // actor forward
  const MatrixXd w1a = mat(theta_, actor_.w1, hidden_, obs_dim_);
  const MatrixXd w2a = mat(theta_, actor_.w2, hidden_, hidden_);
  const MatrixXd w3a = mat(theta_, actor_.w3, act_dim_, hidden_);
  MatrixXd a1 = ((w1a * batch.obs).colwise() + vec(theta_, actor_.b1, hidden_)).array().tanh().matrix();
  MatrixXd a2 = ((w2a * a1).colwise() + vec(theta_, actor_.b2, hidden_)).array().tanh().matrix();
  MatrixXd mean = (w3a * a2).colwise() + vec(theta_, actor_.b3, act_dim_);

  // critic forward
  const MatrixXd w1c = mat(theta_, critic_.w1, hidden_, obs_dim_);
  const MatrixXd w2c = mat(theta_, critic_.w2, hidden_, hidden_);
  const MatrixXd w3c = mat(theta_, critic_.w3, 1, hidden_);
  MatrixXd c1 = ((w1c * batch.obs).colwise() + vec(theta_, critic_.b1, hidden_)).array().tanh().matrix();
  MatrixXd c2 = ((w2c * c1).colwise() + vec(theta_, critic_.b2, hidden_)).array().tanh().matrix();
  Eigen::RowVectorXd values = ((w3c * c2).row(0).array() + theta_(critic_.b3)).matrix();

  const VectorXd ls = log_std();
  const Eigen::ArrayXd inv_std = (-ls.array()).exp();

  // log-densities and the clipped surrogate
  MatrixXd z(act_dim_, m);
  VectorXd logp(m);
  const double logp_base = -0.5 * act_dim_ * kLog2Pi - ls.sum();
  for (int j = 0; j < m; ++j) {
    z.col(j) = (batch.actions.col(j) - mean.col(j)).array() * inv_std;
    logp(j) = logp_base - 0.5 * z.col(j).squaredNorm();
  }

  double policy_loss = 0.0, value_loss = 0.0;
  VectorXd dlogp = VectorXd::Zero(m);
  Eigen::RowVectorXd dvalues(m);
  for (int j = 0; j < m; ++j) {
    const double ratio = std::exp(logp(j) - batch.old_logp(j));
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
    const double adv = batch.advantages(j);
    const double surr1 = ratio * adv;
    const double surr2 = clipped * adv;
    policy_loss -= inv_m * std::min(surr1, surr2);
    if (surr1 <= surr2) dlogp(j) = -inv_m * adv * ratio;  // clipped branch has zero gradient

    const double verr = values(j) - batch.returns(j);
    value_loss += 0.5 * inv_m * verr * verr;
    dvalues(j) = cfg.value_coef * inv_m * verr;
  }
  const double entropy = ls.sum() + 0.5 * act_dim_ * (kLog2Pi + 1.0);
  const double total = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy;

  // backward
  VectorXd grad = VectorXd::Zero(theta_.size());

  // through the Gaussian density into the actor mean and log-std
  MatrixXd dmean(act_dim_, m);
  VectorXd dls = VectorXd::Constant(act_dim_, -cfg.entropy_coef);
  for (int j = 0; j < m; ++j) {
    dmean.col(j) = dlogp(j) * (z.col(j).array() * inv_std).matrix();
    dls += dlogp(j) * (z.col(j).array().square() - 1.0).matrix();
  }

  auto backprop = [&](const Net& net, const MatrixXd& w2, const MatrixXd& w3, const MatrixXd& h1,
                      const MatrixXd& h2, const MatrixXd& dout, int out_dim) {
    mat(grad, net.w3, out_dim, hidden_) += dout * h2.transpose();
    vec(grad, net.b3, out_dim) += dout.rowwise().sum();
    MatrixXd dh2 = ((w3.transpose() * dout).array() * (1.0 - h2.array().square())).matrix();
    mat(grad, net.w2, hidden_, hidden_) += dh2 * h1.transpose();
    vec(grad, net.b2, hidden_) += dh2.rowwise().sum();
    MatrixXd dh1 = ((w2.transpose() * dh2).array() * (1.0 - h1.array().square())).matrix();
    mat(grad, net.w1, hidden_, obs_dim_) += dh1 * batch.obs.transpose();
    vec(grad, net.b1, hidden_) += dh1.rowwise().sum();
  };
  backprop(actor_, w2a, w3a, a1, a2, dmean, act_dim_);
  backprop(critic_, w2c, w3c, c1, c2, dvalues, 1);
  vec(grad, log_std_off_, act_dim_) += dls;

  return {total, std::move(grad)};
}

double policy_gradient_check(const GaussianPolicy& policy, const GaussianPolicy::Batch& batch,
                             const PolicyConfig& cfg, double fd_step) {
  const auto [loss, analytic] = policy.loss_and_grad(batch, cfg);
  (void)loss;

  GaussianPolicy probe = policy;
  Eigen::VectorXd theta = policy.params();
  double worst = 0.0;
  for (int i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + fd_step;
    probe.set_params(theta);
    const double hi = probe.loss(batch, cfg);
    theta(i) = saved - fd_step;
    probe.set_params(theta);
    const double lo = probe.loss(batch, cfg);
    theta(i) = saved;
    const double fd = (hi - lo) / (2 * fd_step);
    worst = std::max(worst, std::abs(analytic(i) - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

Adam::Adam(int dim, double beta1, double beta2, double eps)
    : m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)), beta1_(beta1),
      beta2_(beta2), eps_(eps) {}

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
  ++t_;
  m_ = beta1_ * m_ + (1 - beta1_) * grad;
  v_ = beta2_ * v_ + (1 - beta2_) * grad.cwiseProduct(grad);
  const double bc1 = 1 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1 - std::pow(beta2_, static_cast<double>(t_));
  theta -= (lr / bc1) * (m_.array() / ((v_.array() / bc2).sqrt() + eps_)).matrix();
}

void clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double n = grad.norm();
  if (n > max_norm) grad *= max_norm / n;
}

void compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                 const std::vector<std::uint8_t>& done, double bootstrap_value, double discount,
                 double lambda, Eigen::VectorXd& advantages, Eigen::VectorXd& returns) {
  const int t_max = static_cast<int>(rewards.size());
  advantages.resize(t_max);
  returns.resize(t_max);
  double gae = 0.0;
  for (int t = t_max - 1; t >= 0; --t) {
    const double nonterminal = done[t] ? 0.0 : 1.0;
    const double next_value = t == t_max - 1 ? bootstrap_value : values(t + 1);
    const double delta = rewards(t) + discount * next_value * nonterminal - values(t);
    gae = delta + discount * lambda * nonterminal * gae;
    advantages(t) = gae;
    returns(t) = gae + values(t);
  }
}

}  // namespace srl
