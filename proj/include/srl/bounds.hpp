#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "srl/types.hpp"

namespace srl {

using Labeler = std::function<int(const State&)>;

// Empirical estimates of every term in the generalization-error bound,
// together with the false-positive / false-negative split.
struct BoundReport {
  double eps_hat = 0.0;    // disagreement of h with the real labels on D
  double eps_n_hat = 0.0;  // disagreement of h with the nominal labels on D_n
  double e1_hat = 0.0;     // label disagreement on D_n
  double e2_hat = 0.0;     // label disagreement on D
  double div_proxy = 0.0;  // discriminator-based divergence proxy, in [0, 2]
  double fp_rate = 0.0;    // h safe, truth unsafe
  double fn_rate = 0.0;    // h unsafe, truth safe
  int n_samples_d = 0;
  int n_samples_dn = 0;
  std::uint64_t seed = 0;
};

// Monte-Carlo error frequencies; div_proxy and seed are left untouched.
BoundReport estimate_errors(const Labeler& h, const std::vector<State>& samples_d,
                            const std::vector<State>& samples_dn, const Labeler& oracle_real,
                            const Labeler& oracle_nominal);

// Finite-sample divergence proxy: a 5-nearest-neighbor discriminator is
// trained to tell the two sample sets apart on half of each set and validated
// on the rest; returns 2 (1 - 2 e_balanced) clamped to [0, 2]. This is a
// proxy, not the supremum-based distance.
double divergence_proxy(const std::vector<State>& samples_d, const std::vector<State>& samples_dn,
                        const StateRanges& ranges, std::uint64_t seed);

// Exact finite instance of the bound: explicit distributions, labelings and
// a finite hypothesis class over at most 32 abstract states.
struct ToySpec {
  Eigen::VectorXd dist_d;   // probabilities over states, sums to 1
  Eigen::VectorXd dist_dn;
  std::vector<int> label_real;     // l
  std::vector<int> label_nominal;  // l_n
  std::vector<std::vector<int>> hypotheses;  // must contain h, l and l_n
  int h_index = 0;

  int n_states() const { return static_cast<int>(dist_d.size()); }
};

struct ToyReport {
  double lhs = 0.0;          // generalization error of h
  double source_error = 0.0;
  double divergence = 0.0;   // exact sup-based distance over the class
  double e1 = 0.0;
  double e2 = 0.0;
  double rhs = 0.0;          // source + divergence/2 + min(e1, e2)
  bool bound_holds = false;
  bool intermediate1_holds = false;  // lhs <= source + e1 + divergence/2
  bool intermediate2_holds = false;  // lhs <= source + e2 + divergence/2
};

// Enumerates every term exactly, including the supremum over hypothesis
// pairs. Refuses instances with more than 32 states.
ToyReport verify_bound_toy(const ToySpec& spec);

// Seeded random instance whose hypothesis class contains both labelings.
ToySpec random_toy(std::uint64_t seed);

}  // namespace srl
