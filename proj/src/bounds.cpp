#include "srl/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "srl/rng.hpp"
#include "srl/safety_oracle.hpp"

namespace srl {

BoundReport estimate_errors(const Labeler& h, const std::vector<State>& samples_d,
                            const std::vector<State>& samples_dn, const Labeler& oracle_real,
                            const Labeler& oracle_nominal) {
  if (samples_d.empty() || samples_dn.empty())
    throw InsufficientData("error estimation needs non-empty sample sets");

  BoundReport r;
  r.n_samples_d = static_cast<int>(samples_d.size());
  r.n_samples_dn = static_cast<int>(samples_dn.size());

  long fp = 0, fn = 0, e2 = 0;
  for (const State& x : samples_d) {
    const int hx = h(x);
    const int lx = oracle_real(x);
    if (hx == 1 && lx == 0) ++fp;
    if (hx == 0 && lx == 1) ++fn;
    if (lx != oracle_nominal(x)) ++e2;
  }
  r.fp_rate = static_cast<double>(fp) / r.n_samples_d;
  r.fn_rate = static_cast<double>(fn) / r.n_samples_d;
  r.eps_hat = static_cast<double>(fp + fn) / r.n_samples_d;
  r.e2_hat = static_cast<double>(e2) / r.n_samples_d;

  long mis = 0, e1 = 0;
  for (const State& x : samples_dn) {
    const int ln = oracle_nominal(x);
    if (h(x) != ln) ++mis;
    if (oracle_real(x) != ln) ++e1;
  }
  r.eps_n_hat = static_cast<double>(mis) / r.n_samples_dn;
  r.e1_hat = static_cast<double>(e1) / r.n_samples_dn;
  return r;
}

namespace {

// Balanced validation error of a 5-NN discriminator separating a (class 1)
// from b (class 0). Both sets are shuffled with the same seed and split in
// half, so the construction is symmetric in its arguments.
double knn_balanced_error(const std::vector<State>& a, const std::vector<State>& b,
                          const StateRanges& ranges, std::uint64_t seed) {
  auto split = [&](const std::vector<State>& src, std::vector<State>& train,
                   std::vector<State>& val) {
    std::vector<State> shuffled = src;
    Rng rng(seed);
    rng.shuffle(shuffled);
    const std::size_t n_train = (shuffled.size() + 1) / 2;
    train.assign(shuffled.begin(), shuffled.begin() + n_train);
    val.assign(shuffled.begin() + n_train, shuffled.end());
  };
  std::vector<State> train_a, val_a, train_b, val_b;
  split(a, train_a, val_a);
  split(b, train_b, val_b);

  std::vector<std::pair<State, int>> train;
  for (const State& x : train_a) train.emplace_back(x, 1);
  for (const State& x : train_b) train.emplace_back(x, 0);

  auto classify = [&](const State& x) {
    std::vector<std::pair<double, int>> d;
    d.reserve(train.size());
    for (const auto& [s, c] : train) d.emplace_back(normalized_distance(x, s, ranges), c);
    const std::size_t kk = std::min<std::size_t>(5, d.size());
    std::stable_sort(d.begin(), d.end(),
                     [](const auto& p, const auto& q) { return p.first < q.first; });
    int votes = 0;
    for (std::size_t i = 0; i < kk; ++i) votes += d[i].second;
    return 2 * votes > static_cast<int>(kk) ? 1 : 0;
  };

  auto error_rate = [&](const std::vector<State>& val, int truth) {
    if (val.empty()) return 0.5;  // no evidence
    long wrong = 0;
    for (const State& x : val)
      if (classify(x) != truth) ++wrong;
    return static_cast<double>(wrong) / val.size();
  };
  return 0.5 * (error_rate(val_a, 1) + error_rate(val_b, 0));
}

}  // namespace

double divergence_proxy(const std::vector<State>& samples_d, const std::vector<State>& samples_dn,
                        const StateRanges& ranges, std::uint64_t seed) {
  if (samples_d.empty() || samples_dn.empty())
    throw InsufficientData("divergence proxy needs non-empty sample sets");
  const double err = knn_balanced_error(samples_d, samples_dn, ranges, seed);
  return std::clamp(2.0 * (1.0 - 2.0 * err), 0.0, 2.0);
}

ToyReport verify_bound_toy(const ToySpec& spec) {
  const int n = spec.n_states();
  if (n < 1 || n > 32) throw ConfigError("toy instances must have between 1 and 32 states");
  if (spec.dist_dn.size() != n || static_cast<int>(spec.label_real.size()) != n ||
      static_cast<int>(spec.label_nominal.size()) != n)
    throw ConfigError("toy instance sizes are inconsistent");
  if (spec.hypotheses.empty() || spec.h_index < 0 ||
      spec.h_index >= static_cast<int>(spec.hypotheses.size()))
    throw ConfigError("toy hypothesis index out of range");

  auto expect_disagreement = [&](const Eigen::VectorXd& dist, const std::vector<int>& f,
                                 const std::vector<int>& g) {
    double e = 0.0;
    for (int i = 0; i < n; ++i)
      if (f[i] != g[i]) e += dist(i);
    return e;
  };

  const std::vector<int>& h = spec.hypotheses[spec.h_index];
  ToyReport r;
  r.lhs = expect_disagreement(spec.dist_d, h, spec.label_real);
  r.source_error = expect_disagreement(spec.dist_dn, h, spec.label_nominal);
  r.e1 = expect_disagreement(spec.dist_dn, spec.label_real, spec.label_nominal);
  r.e2 = expect_disagreement(spec.dist_d, spec.label_real, spec.label_nominal);

  // d_{H delta H}: supremum over hypothesis pairs of the disagreement-mass gap
  double sup = 0.0;
  for (std::size_t i = 0; i < spec.hypotheses.size(); ++i)
    for (std::size_t j = 0; j < spec.hypotheses.size(); ++j) {
      const double gap = expect_disagreement(spec.dist_d, spec.hypotheses[i], spec.hypotheses[j]) -
                         expect_disagreement(spec.dist_dn, spec.hypotheses[i], spec.hypotheses[j]);
      sup = std::max(sup, std::abs(gap));
    }
  r.divergence = 2.0 * sup;

  r.rhs = r.source_error + 0.5 * r.divergence + std::min(r.e1, r.e2);
  const double tol = 1e-12;
  r.bound_holds = r.lhs <= r.rhs + tol;
  r.intermediate1_holds = r.lhs <= r.source_error + r.e1 + 0.5 * r.divergence + tol;
  r.intermediate2_holds = r.lhs <= r.source_error + r.e2 + 0.5 * r.divergence + tol;
  return r;
}

ToySpec random_toy(std::uint64_t seed) {
  Rng rng(seed);
  const int n = 4 + static_cast<int>(rng.uniform_int(17));  // 4..20 states

  auto random_dist = [&]() {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = -std::log(1.0 - rng.uniform());
    return (d / d.sum()).eval();
  };
  auto random_labeling = [&]() {
    std::vector<int> l(n);
    for (int i = 0; i < n; ++i) l[i] = static_cast<int>(rng.uniform_int(2));
    return l;
  };

  ToySpec spec;
  spec.dist_d = random_dist();
  spec.dist_dn = random_dist();
  spec.label_real = random_labeling();
  spec.label_nominal = random_labeling();

  const int extra = 2 + static_cast<int>(rng.uniform_int(5));
  for (int i = 0; i < extra; ++i) spec.hypotheses.push_back(random_labeling());
  // the proof treats both labelings as members of the class
  spec.hypotheses.push_back(spec.label_real);
  spec.hypotheses.push_back(spec.label_nominal);
  spec.h_index = static_cast<int>(rng.uniform_int(spec.hypotheses.size()));
  return spec;
}

}  // namespace srl
