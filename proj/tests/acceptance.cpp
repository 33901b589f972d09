// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavy artifacts (datasets, regions, training runs) are
// built once and shared. Usage: acceptance <path-to-srl_cli> <scratch-dir>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srl/bounds.hpp"
#include "srl/config.hpp"
#include "srl/corrective.hpp"
#include "srl/datagen.hpp"
#include "srl/embedding.hpp"
#include "srl/io.hpp"
#include "srl/safe_region.hpp"
#include "srl/trainer.hpp"

using namespace srl;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void report_extra(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] invariant: %s (%s)\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Lab {
  PendulumParams nominal = PendulumParams::nominal();
  SimConfig sim;
  StateRanges ranges = StateRanges::defaults();
  LqrWeights weights;
  FeedbackGain gain;
  LinearModel linear;
  RecoverySettings recovery;

  Lab() {
    linear = linearize(nominal);
    gain = lqr_gain(linear, weights);
  }
};

struct AlphaArtifacts {
  std::vector<TrainingSample> dataset;
  std::optional<SafeRegionModel> model;
};

// ---- criterion 1: dynamics fidelity ----------------------------------------
void criterion_1(const Lab& lab) {
  State x = State::Zero();
  x(0) = 0.3;
  const double e0 = total_energy(x, lab.nominal);
  State s = x;
  for (int i = 0; i < 100; ++i) s = integrate_step(s, Control::Zero(), lab.nominal, lab.sim);
  const double drift = std::abs(total_energy(s, lab.nominal) - e0) / std::abs(e0);

  const Eigen::Vector2d fk = forward_kinematics(State::Zero(), lab.nominal);
  const bool fk_exact = fk(0) == 0.0 && fk(1) == 3.0;

  report(1, "dynamics fidelity", drift < 1e-6 && fk_exact,
         "energy drift " + fmt(drift) + ", upright end effector (" + fmt(fk(0)) + ", " +
             fmt(fk(1)) + ")");
}

// ---- criterion 2: corrective synthesis --------------------------------------
void criterion_2(const Lab& lab) {
  const Eigen::MatrixXd p = solve_care(lab.linear.A, lab.linear.B, lab.weights.Q, lab.weights.R);
  const Eigen::MatrixXd residual =
      lab.linear.A.transpose() * p + p * lab.linear.A -
      p * lab.linear.B * lab.weights.R.inverse() * lab.linear.B.transpose() * p + lab.weights.Q;
  const bool res_ok = residual.norm() < 1e-8 * p.norm();

  const double max_eig = max_closed_loop_real_eig(lab.linear, lab.gain);

  State x;
  x << 0.05, 0.05, 0.05, 0, 0, 0;
  const RecoveryOutcome rec = recovery_rollout(x, lab.gain, lab.nominal, lab.sim, lab.recovery);

  report(2, "corrective synthesis", res_ok && max_eig < 0.0 && rec.success,
         "residual/||P|| " + fmt(residual.norm() / p.norm()) + ", max closed-loop eig " +
             fmt(max_eig) + ", recovery " + (rec.success ? "succeeded" : "failed"));
}

// ---- criteria 3-5: datasets, embeddings, conservativeness -------------------
std::map<double, AlphaArtifacts> build_artifacts(const Lab& lab, std::uint64_t seed) {
  Rng rollout_rng = Rng(seed).split(0);
  const auto x = collect_rollouts(lab.nominal, lab.sim, 200, 300, rollout_rng);
  const MndModel mnd = fit_mnd(x);

  std::map<double, AlphaArtifacts> out;
  for (const double alpha : {0.0, 0.5, 1.0}) {
    DatasetSpec spec;
    spec.k = 1000;
    spec.alpha = alpha;
    spec.seed = seed;
    spec.ranges = lab.ranges;
    AlphaArtifacts art;
    art.dataset = build_dataset(spec, mnd, lab.nominal, lab.gain, lab.sim, lab.recovery);

    std::vector<State> states;
    std::vector<int> labels;
    for (const auto& s : art.dataset) {
      states.push_back(s.state);
      labels.push_back(s.label);
    }
    TsneConfig tsne;  // paper-scale defaults
    PreviewContext context{lab.gain, lab.nominal, lab.sim};
    art.model = SafeRegionModel::create(run_tsne(states, labels, lab.ranges, tsne, context), 0.0,
                                        0.8);
    out[alpha] = std::move(art);
  }
  return out;
}

void criterion_3(const std::map<double, AlphaArtifacts>& art) {
  std::map<double, long> ud_rows, safe;
  for (const auto& [alpha, a] : art) {
    for (const auto& s : a.dataset) {
      ud_rows[alpha] += s.provenance == Provenance::ud ? 1 : 0;
      safe[alpha] += s.label;
    }
  }
  const bool counts_ok = ud_rows.at(0.0) == 0 && ud_rows.at(0.5) == 500 && ud_rows.at(1.0) == 1000;
  const bool sizes_ok = art.at(0.0).dataset.size() == 1000 && art.at(0.5).dataset.size() == 1000 &&
                        art.at(1.0).dataset.size() == 1000;
  const bool ordering = safe.at(0.0) > safe.at(1.0);
  report(3, "dataset composition", counts_ok && sizes_ok && ordering,
         "ud rows " + std::to_string(ud_rows.at(0.0)) + "/" + std::to_string(ud_rows.at(0.5)) +
             "/" + std::to_string(ud_rows.at(1.0)) + ", safe fraction " +
             fmt(safe.at(0.0) / 1000.0) + " vs " + fmt(safe.at(1.0) / 1000.0));
}

void criterion_4(const std::map<double, AlphaArtifacts>& art) {
  bool perplexity_ok = true, kl_ok = true, acc_ok = true;
  double worst_perp = 0.0, worst_acc = 1.0;
  for (const auto& [alpha, a] : art) {
    const Embedding& emb = a.model->embedding;

    // per-point perplexity, recomputed from the conditional entropies
    const Affinities aff = compute_affinities(emb.features, emb.config.perplexity);
    for (int i = 0; i < emb.size(); ++i) {
      double h = 0.0;
      for (int j = 0; j < emb.size(); ++j) {
        const double p = aff.conditional(i, j);
        if (p > 0) h -= p * std::log(p);
      }
      worst_perp = std::max(worst_perp, std::abs(std::exp(h) - emb.config.perplexity));
    }
    perplexity_ok = perplexity_ok && worst_perp <= 1e-3;

    for (std::size_t i = emb.config.exaggeration_iters; i + 50 < emb.kl_trace.size(); ++i)
      if (emb.kl_trace[i + 50] > emb.kl_trace[i] + 1e-3) kl_ok = false;

    const double acc = loo_knn_accuracy(emb);
    worst_acc = std::min(worst_acc, acc);
    acc_ok = acc_ok && acc >= 0.9;
  }
  report(4, "embedding quality", perplexity_ok && kl_ok && acc_ok,
         "worst |perplexity error| " + fmt(worst_perp) + ", KL windows " +
             (kl_ok ? "monotone" : "violated") + ", worst LOO accuracy " + fmt(worst_acc));
}

void criterion_5(const Lab& lab, const std::map<double, AlphaArtifacts>& art,
                 std::uint64_t seed) {
  Rng rng = Rng(seed).split(17);
  const auto probes = sample_ud(10000, lab.ranges, rng);
  std::map<double, double> fraction;
  for (const auto& [alpha, a] : art) {
    long safe = 0;
    for (const State& x : probes) safe += predict(x, *a.model, lab.ranges);
    fraction[alpha] = static_cast<double>(safe) / probes.size();
  }
  const bool ok = fraction.at(1.0) <= fraction.at(0.5) + 0.02 &&
                  fraction.at(0.5) <= fraction.at(0.0) + 0.02;
  report(5, "conservativeness ordering", ok,
         "predicted-safe fractions " + fmt(fraction.at(0.0)) + " / " + fmt(fraction.at(0.5)) +
             " / " + fmt(fraction.at(1.0)) + " for alpha 0 / 0.5 / 1");
}

// ---- criteria 6-7: supervised training at scale ------------------------------
struct TrainOutcome {
  long activations = 0;
  long failures = 0;
  bool rows_ok = true;  // failures <= activations in every row
};

void criteria_6_and_7(const Lab& lab, const std::map<double, AlphaArtifacts>& art) {
  const PendulumParams real = lab.nominal.with_delta(1.5);
  const std::vector<std::uint64_t> seeds{101, 102, 103};
  PolicyConfig cfg;  // paper defaults

  std::map<double, TrainOutcome> pooled;
  bool supervisor_ok = true, after_tprime_ok = true, rows_ok = true;
  long checked_actions = 0;

  for (const auto& [alpha, a] : art) {
    const SafeRegionModel& model = *a.model;
    Supervisor sup;
    sup.model = &model;
    sup.gain = lab.gain;
    sup.recovery = lab.recovery;

    for (const std::uint64_t seed : seeds) {
      TrainOptions options;
      options.ranges = lab.ranges;
      // the smoke-run log is audited once, on the middle condition
      const bool audited = alpha == 0.5 && seed == seeds.front();
      options.record_step_log = audited;

      const TrainResult result = train(cfg, sup, real, lab.sim, 100000, seed, options);
      pooled[alpha].activations += result.metrics.activations;
      pooled[alpha].failures += result.metrics.failures;
      for (const auto& row : result.metrics.rows)
        if (row.failures > row.activations) rows_ok = false;

      if (audited) {
        for (const auto& entry : result.step_log) {
          if (predict(entry.state, model, lab.ranges) != 1) supervisor_ok = false;
          ++checked_actions;
        }
        // per-episode: no policy action at or past the trigger step
        std::map<long, long> t_prime;
        for (long e = 0; e < static_cast<long>(result.metrics.episodes.size()); ++e)
          if (result.metrics.episodes[e].cause == Termination::predicted_unsafe)
            t_prime[e] = result.metrics.episodes[e].t_prime;
        for (const auto& entry : result.step_log) {
          const auto it = t_prime.find(entry.episode);
          if (it != t_prime.end() && entry.step >= it->second) after_tprime_ok = false;
        }
      }
    }
  }

  report(6, "supervisor invariant", supervisor_ok && after_tprime_ok && rows_ok,
         std::to_string(checked_actions) + " logged policy actions audited, predicted-unsafe " +
             (supervisor_ok ? "never acted on" : "ACTED ON") + ", post-trigger actions " +
             (after_tprime_ok ? "none" : "FOUND") + ", counter rows " +
             (rows_ok ? "consistent" : "inconsistent"));

  auto success_rate = [&](double alpha) {
    const TrainOutcome& o = pooled.at(alpha);
    return o.activations == 0
               ? 1.0
               : 1.0 - static_cast<double>(o.failures) / static_cast<double>(o.activations);
  };
  const double s0 = success_rate(0.0), s05 = success_rate(0.5), s1 = success_rate(1.0);
  const bool trend = s05 >= s0 - 0.05 && s1 >= s05 - 0.05;
  report(7, "safety-vs-alpha trend", trend,
         "recovery success rates " + fmt(s0) + " / " + fmt(s05) + " / " + fmt(s1) +
             " for alpha 0 / 0.5 / 1 (activations " + std::to_string(pooled.at(0.0).activations) +
             " / " + std::to_string(pooled.at(0.5).activations) + " / " +
             std::to_string(pooled.at(1.0).activations) + ")");
}

// ---- criterion 8: learner correctness ---------------------------------------
void criterion_8(const Lab& lab, const fs::path& scratch) {
  PolicyConfig toy;
  toy.hidden = 4;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng init(seed);
    GaussianPolicy policy(4, 2, 4, init);
    Rng rng(seed + 50);
    GaussianPolicy::Batch batch;
    const int m = 12;
    batch.obs.resize(4, m);
    batch.actions.resize(2, m);
    batch.old_logp.resize(m);
    batch.advantages.resize(m);
    batch.returns.resize(m);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < 4; ++i) batch.obs(i, j) = rng.normal();
      const auto [action, logp] = policy.sample_action(batch.obs.col(j), rng);
      batch.actions.col(j) = action;
      batch.old_logp(j) = logp + 0.3 * rng.normal();
      batch.advantages(j) = rng.normal();
      batch.returns(j) = policy.value(batch.obs.col(j)) + rng.normal();
    }
    worst = std::max(worst, policy_gradient_check(policy, batch, toy, 1e-5));
  }
  const bool grad_ok = worst < 1e-4;

  Eigen::VectorXd rewards(3), values(3), advantages, returns;
  rewards << 1, 1, 1;
  values.setZero();
  compute_gae(rewards, values, {0, 0, 1}, 0.0, 0.99, 0.95, advantages, returns);
  const double a1 = 1.0 + 0.99 * 0.95;
  const double a0 = 1.0 + 0.99 * 0.95 * a1;
  const bool gae_ok = std::abs(advantages(0) - a0) < 1e-9 && std::abs(advantages(1) - a1) < 1e-9 &&
                      std::abs(advantages(2) - 1.0) < 1e-9;

  // identical seeds must give byte-identical metrics files
  PolicyConfig small;
  small.hidden = 16;
  small.steps_per_update = 512;
  small.minibatches = 32;
  small.epochs = 3;
  small.episode_horizon = 200;
  const auto run = [&] {
    return train(small, std::nullopt, lab.nominal.with_delta(1.5), lab.sim, 1024, 4242);
  };
  const TrainResult ra = run(), rb = run();
  const nlohmann::json echo{{"purpose", "determinism check"}};
  write_metrics_csv((scratch / "det_a.csv").string(), ra.metrics, echo);
  write_metrics_csv((scratch / "det_b.csv").string(), rb.metrics, echo);
  const bool det_ok = slurp(scratch / "det_a.csv") == slurp(scratch / "det_b.csv") &&
                      ra.policy_params == rb.policy_params;

  report(8, "learner correctness", grad_ok && gae_ok && det_ok,
         "max relative gradient error " + fmt(worst) + ", GAE " + (gae_ok ? "exact" : "WRONG") +
             ", repeat run " + (det_ok ? "byte-identical" : "DIFFERS"));
}

// ---- criterion 9: theorem machinery -----------------------------------------
void criterion_9(const Lab& lab, const std::map<double, AlphaArtifacts>& art,
                 std::uint64_t seed) {
  // decomposition identity on real pipeline samples
  const SafeRegionModel& model = *art.at(0.5).model;
  Rng rng = Rng(seed).split(23);
  const auto samples = sample_ud(200, lab.ranges, rng);
  const PendulumParams real = lab.nominal.with_delta(1.5);
  const Labeler h = [&](const State& x) { return predict(x, model, lab.ranges); };
  const Labeler oracle_real = [&](const State& x) {
    return label_state(x, real, lab.gain, lab.sim, lab.recovery);
  };
  const Labeler oracle_nominal = [&](const State& x) {
    return label_state(x, lab.nominal, lab.gain, lab.sim, lab.recovery);
  };
  const BoundReport r = estimate_errors(h, samples, samples, oracle_real, oracle_nominal);
  const bool identity_ok = std::abs(r.eps_hat - (r.fp_rate + r.fn_rate)) < 1e-12;

  // delta = 1 collapses the disagreement terms exactly
  const BoundReport same =
      estimate_errors(h, samples, samples, oracle_nominal, oracle_nominal);
  const bool collapse_ok = same.e1_hat == 0.0 && same.e2_hat == 0.0;

  bool toys_ok = true;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const ToyReport toy = verify_bound_toy(random_toy(s));
    if (!toy.bound_holds || !toy.intermediate1_holds || !toy.intermediate2_holds) toys_ok = false;
  }

  report(9, "theorem machinery", identity_ok && collapse_ok && toys_ok,
         "eps - (fp + fn) = " + fmt(r.eps_hat - (r.fp_rate + r.fn_rate)) + ", delta=1 E1/E2 " +
             fmt(same.e1_hat) + "/" + fmt(same.e2_hat) + ", 100 toys " +
             (toys_ok ? "hold" : "VIOLATED"));
}

// extra module invariant: the fitted-distribution hypothesis generalizes at
// least as well as the uniform one on fitted-distribution evaluation states
void extra_bounds_trend(const Lab& lab, const std::map<double, AlphaArtifacts>& art,
                        std::uint64_t seed) {
  Rng rollout_rng = Rng(seed).split(0);
  const auto x = collect_rollouts(lab.nominal, lab.sim, 200, 300, rollout_rng);
  const MndModel mnd = fit_mnd(x);
  Rng rng = Rng(seed).split(29);
  const auto eval_states = sample_mnd(mnd, 1000, lab.ranges, rng);

  auto eps_hat = [&](const SafeRegionModel& model) {
    long wrong = 0;
    for (const State& s : eval_states) {
      const int truth = label_state(s, lab.nominal, lab.gain, lab.sim, lab.recovery);
      if (predict(s, model, lab.ranges) != truth) ++wrong;
    }
    return static_cast<double>(wrong) / eval_states.size();
  };
  const double e_mnd = eps_hat(*art.at(0.0).model);
  const double e_ud = eps_hat(*art.at(1.0).model);
  // both are Monte-Carlo frequencies; the ordering claim is only decidable
  // outside the joint sampling noise of the two estimates
  const double n = static_cast<double>(eval_states.size());
  const double noise =
      2.0 * std::sqrt(e_mnd * (1 - e_mnd) / n + e_ud * (1 - e_ud) / n + 1e-12);
  report_extra("generalization trend at delta=1 over fitted-distribution samples",
               e_mnd <= e_ud + noise,
               "eps(alpha=0) " + fmt(e_mnd) + " vs eps(alpha=1) " + fmt(e_ud) +
                   " (two-sided sampling noise " + fmt(noise) + ")");
}

// ---- criterion 10: byte-identical reruns through the CLI ---------------------
void criterion_10(const std::string& cli, const fs::path& scratch) {
  const fs::path dir_a = scratch / "rerun_a", dir_b = scratch / "rerun_b";
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);

  const fs::path cfg_path = scratch / "rerun.json";
  {
    // at this reduced k the origin clears the threshold only under the plain
    // kernel-frequency assessment, so the rerun config pins a zero prior
    std::ofstream cfg(cfg_path);
    cfg << R"({
  "dataset": {"k": 200, "alpha": 0.5, "seed": 99, "rollout_episodes": 50, "rollout_steps": 150},
  "tsne": {"perplexity": 15, "iterations": 250, "exaggeration_iters": 60, "momentum_switch_iter": 60, "seed": 5},
  "region": {"prior_weight": 0},
  "policy": {"hidden": 16, "steps_per_update": 512, "minibatches": 32, "epochs": 3, "episode_horizon": 200},
  "run": {"total_steps": 1024, "seeds": [11], "output_dir": "unused"}
})";
  }

  auto run = [&](const std::string& args) {
    const std::string command = cli + " " + args + " > /dev/null 2>&1";
    return std::system(command.c_str()) == 0;
  };
  bool all_ok = true;
  std::string failed;
  for (const fs::path& dir : {dir_a, dir_b}) {
    const std::string base = " --config " + cfg_path.string() + " --out " + dir.string();
    if (!run("gen-data" + base)) all_ok = false;
    if (!run("build-region" + base + " --dataset " + (dir / "dataset.csv").string()))
      all_ok = false;
    if (!run("train" + base + " --region " + (dir / "region.json").string() +
             " --set pendulum.delta=1.5"))
      all_ok = false;
    if (!run("eval" + base + " --region " + (dir / "region.json").string() +
             " --grid-size 500"))
      all_ok = false;
    if (!run("bounds" + base + " --region " + (dir / "region.json").string() + " --states " +
             (dir / "states_seed11.csv").string()))
      all_ok = false;
  }
  for (const char* name :
       {"dataset.csv", "mnd.json", "hist_theta1.csv", "region.json", "embedding.csv",
        "region_grid.csv", "metrics_seed11.csv", "metrics_mean.csv", "policy_seed11.json",
        "states_seed11.csv", "eval.json", "bounds.json"}) {
    if (slurp(dir_a / name) != slurp(dir_b / name) || slurp(dir_a / name).empty()) {
      all_ok = false;
      failed += std::string(name) + " ";
    }
  }
  report(10, "reproducibility", all_ok,
         all_ok ? "12 artifacts byte-identical across reruns"
                : "differing or missing artifacts: " + failed);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <srl_cli path> <scratch dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);

  const std::uint64_t kSeed = 20240801;
  Lab lab;

  criterion_1(lab);
  criterion_2(lab);

  const auto artifacts = build_artifacts(lab, kSeed);
  criterion_3(artifacts);
  criterion_4(artifacts);
  criterion_5(lab, artifacts, kSeed);

  criterion_8(lab, scratch);
  criterion_9(lab, artifacts, kSeed);
  extra_bounds_trend(lab, artifacts, kSeed);
  criterion_10(cli, scratch);

  criteria_6_and_7(lab, artifacts);

  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
