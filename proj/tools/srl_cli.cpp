// Command-line front end for the safe-learning laboratory: data generation,
// region construction, supervised training, evaluation and bound reports.
// Every subcommand is deterministic given its configuration file.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srl/bounds.hpp"
#include "srl/config.hpp"
#include "srl/corrective.hpp"
#include "srl/datagen.hpp"
#include "srl/io.hpp"
#include "srl/safe_region.hpp"
#include "srl/trainer.hpp"
#include "srl/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace srl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;  // overrides the config's output_dir when set
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment configuration file (JSON)");
  cmd->add_option("--set", args.overrides,
                  "override a config value, e.g. --set dataset.alpha=0.5");
  cmd->add_option("--out", args.out_dir, "output directory (overrides run.output_dir)");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  json doc = json::object();
  if (!args.config_path.empty()) doc = load_json_file(args.config_path);
  for (const std::string& o : args.overrides) apply_override(doc, o);
  ExperimentConfig cfg = config_from_json(doc);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  cfg.validate();
  return cfg;
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

FeedbackGain nominal_gain(const ExperimentConfig& cfg) {
  return lqr_gain(linearize(cfg.pendulum.with_delta(1.0)), cfg.lqr_weights());
}

int run_gen_data(const CommonArgs& args) {
  const ExperimentConfig cfg = resolve_config(args);
  const fs::path out = ensure_out_dir(cfg);
  const json echo = config_to_json(cfg);

  const PendulumParams nominal = cfg.pendulum.with_delta(1.0);
  const FeedbackGain gain = nominal_gain(cfg);

  Rng rollout_rng = Rng(cfg.data_seed).split(0);
  const std::vector<State> x =
      collect_rollouts(nominal, cfg.sim, cfg.rollout_episodes, cfg.rollout_steps, rollout_rng);
  const MndModel mnd = fit_mnd(x);

  const auto dataset = build_dataset(cfg.dataset_spec(), mnd, nominal, gain, cfg.sim,
                                     cfg.recovery_settings());

  write_dataset_csv((out / "dataset.csv").string(), dataset, echo);
  json mnd_doc = mnd_to_json(mnd);
  mnd_doc["version"] = kVersion;
  mnd_doc["config"] = echo;
  save_json_file((out / "mnd.json").string(), mnd_doc);
  write_hist2d_csv((out / "hist_theta1.csv").string(), dataset, cfg.ranges, 40, echo);

  long safe = 0;
  for (const auto& s : dataset) safe += s.label;
  std::printf("dataset: %zu samples, %ld safe (%.3f), %d from the uniform part\n", dataset.size(),
              safe, static_cast<double>(safe) / dataset.size(), ud_count(cfg.dataset_spec()));
  return 0;
}

int run_build_region(const CommonArgs& args, const std::string& dataset_path) {
  const ExperimentConfig cfg = resolve_config(args);
  const fs::path out = ensure_out_dir(cfg);
  const json echo = config_to_json(cfg);

  const auto dataset = read_dataset_csv(dataset_path);
  std::vector<State> states;
  std::vector<int> labels;
  for (const auto& s : dataset) {
    states.push_back(s.state);
    labels.push_back(s.label);
  }

  const FeedbackGain gain = nominal_gain(cfg);
  PreviewContext context;
  context.gain = gain;
  context.params = cfg.pendulum.with_delta(1.0);
  context.sim = cfg.sim;
  const Embedding emb = run_tsne(states, labels, cfg.ranges, cfg.tsne, context);
  const SafeRegionModel model =
      SafeRegionModel::create(emb, cfg.gamma_bandwidth, cfg.p_t, cfg.gamma_prior);

  save_region((out / "region.json").string(), model, gain, echo);
  write_scatter_csv((out / "embedding.csv").string(), model.embedding, echo);
  write_grid_csv((out / "region_grid.csv").string(), region_grid(model, 100), echo);

  const double acc = loo_knn_accuracy(model.embedding);
  std::printf("region: k=%d, final KL %.4f, leave-one-out 5-NN accuracy %.4f\n",
              model.embedding.size(), model.embedding.final_kl, acc);
  return 0;
}

int run_train(const CommonArgs& args, const std::string& region_path, bool free_learning) {
  const ExperimentConfig cfg = resolve_config(args);
  const fs::path out = ensure_out_dir(cfg);

  std::optional<RegionFile> region;
  if (!free_learning) {
    if (region_path.empty())
      throw ConfigError("train needs --region, or --free for the unsupervised baseline");
    region = load_region(region_path);
  }

  std::vector<LearningMetrics> all_metrics;
  for (const std::uint64_t seed : cfg.seeds) {
    json echo = config_to_json(cfg);
    echo["resolved_seed"] = seed;
    echo["supervised"] = !free_learning;

    std::optional<Supervisor> sup;
    if (region) {
      sup.emplace();
      sup->model = &region->model;
      sup->gain.K = region->gain;
      sup->recovery = cfg.recovery_settings();
    }
    TrainOptions options;
    options.record_step_log = true;
    options.ranges = cfg.ranges;

    const TrainResult result =
        train(cfg.policy, sup, cfg.pendulum, cfg.sim, cfg.total_steps, seed, options);

    const std::string tag = "seed" + std::to_string(seed);
    write_metrics_csv((out / ("metrics_" + tag + ".csv")).string(), result.metrics, echo);
    save_policy((out / ("policy_" + tag + ".json")).string(), result, echo);
    std::vector<State> visited;
    visited.reserve(result.step_log.size());
    for (const auto& entry : result.step_log) visited.push_back(entry.state);
    write_states_csv((out / ("states_" + tag + ".csv")).string(), visited, echo);

    const auto& m = result.metrics;
    std::printf("seed %llu: %zu updates, activations %ld, failures %ld (%ld ground, %ld "
                "non-converged), violations %ld\n",
                static_cast<unsigned long long>(seed), m.rows.size(), m.activations, m.failures,
                m.failures_violation, m.failures_nonconverged, m.violations);
    all_metrics.push_back(result.metrics);
  }

  // arithmetic mean of the per-seed curves
  LearningMetrics mean;
  const std::size_t n_rows = all_metrics.front().rows.size();
  for (std::size_t i = 0; i < n_rows; ++i) {
    MetricsRow row = all_metrics.front().rows[i];
    double reward = 0, act = 0, fail = 0, viol = 0;
    for (const auto& m : all_metrics) {
      reward += m.rows[i].mean_reward;
      act += static_cast<double>(m.rows[i].activations);
      fail += static_cast<double>(m.rows[i].failures);
      viol += static_cast<double>(m.rows[i].violations);
    }
    const double n = static_cast<double>(all_metrics.size());
    row.mean_reward = reward / n;
    row.activations = static_cast<long>(std::llround(act / n));
    row.failures = static_cast<long>(std::llround(fail / n));
    row.violations = static_cast<long>(std::llround(viol / n));
    mean.rows.push_back(row);
  }
  json echo = config_to_json(cfg);
  echo["supervised"] = !free_learning;
  echo["seed_average"] = true;
  write_metrics_csv((out / "metrics_mean.csv").string(), mean, echo);
  return 0;
}

int run_eval(const CommonArgs& args, const std::string& region_path, int grid_size) {
  const ExperimentConfig cfg = resolve_config(args);
  const fs::path out = ensure_out_dir(cfg);
  const RegionFile region = load_region(region_path);

  Rng rng = Rng(cfg.data_seed).split(99);
  const auto probes = sample_ud(grid_size, cfg.ranges, rng);
  long safe = 0;
  for (const State& x : probes) safe += predict(x, region.model, cfg.ranges);
  const double fraction = static_cast<double>(safe) / probes.size();
  const double acc = loo_knn_accuracy(region.model.embedding);

  json doc;
  doc["version"] = kVersion;
  doc["config"] = config_to_json(cfg);
  doc["predicted_safe_fraction"] = fraction;
  doc["loo_accuracy"] = acc;
  doc["n_probes"] = grid_size;
  save_json_file((out / "eval.json").string(), doc);
  std::printf("eval: predicted-safe fraction %.4f over %d uniform probes, accuracy %.4f\n",
              fraction, grid_size, acc);
  return 0;
}

int run_bounds(const CommonArgs& args, const std::string& region_path,
               const std::string& states_path) {
  const ExperimentConfig cfg = resolve_config(args);
  const fs::path out = ensure_out_dir(cfg);
  const RegionFile region = load_region(region_path);

  // D: states visited during supervised learning, evenly subsampled
  std::vector<State> logged = read_states_csv(states_path);
  if (logged.empty()) throw ConfigError("states file is empty: " + states_path);
  std::vector<State> samples_d;
  const std::size_t target = 1000;
  if (logged.size() <= target) {
    samples_d = logged;
  } else {
    const double stride = static_cast<double>(logged.size()) / target;
    for (std::size_t i = 0; i < target; ++i)
      samples_d.push_back(logged[static_cast<std::size_t>(i * stride)]);
  }

  // D_n: the training dataset the region was learned from
  std::vector<State> samples_dn;
  for (int i = 0; i < region.model.embedding.size(); ++i)
    samples_dn.push_back(region.model.embedding.source_states.row(i).transpose());

  FeedbackGain gain;
  gain.K = region.gain;
  const PendulumParams real = cfg.pendulum;
  const PendulumParams nominal = cfg.pendulum.with_delta(1.0);
  const auto recovery = cfg.recovery_settings();

  const Labeler h = [&](const State& x) { return predict(x, region.model, cfg.ranges); };
  const Labeler oracle_real = [&](const State& x) {
    return label_state(x, real, gain, cfg.sim, recovery);
  };
  const Labeler oracle_nominal = [&](const State& x) {
    return label_state(x, nominal, gain, cfg.sim, recovery);
  };

  BoundReport report = estimate_errors(h, samples_d, samples_dn, oracle_real, oracle_nominal);
  report.seed = cfg.data_seed;
  report.div_proxy = divergence_proxy(samples_d, samples_dn, cfg.ranges, cfg.data_seed);

  save_bound_report((out / "bounds.json").string(), report, config_to_json(cfg));
  std::printf("bounds: eps %.4f (fp %.4f, fn %.4f), eps_n %.4f, E1 %.4f, E2 %.4f, proxy %.4f\n",
              report.eps_hat, report.fp_rate, report.fn_rate, report.eps_n_hat, report.e1_hat,
              report.e2_hat, report.div_proxy);
  return 0;
}

int run_verify_toy(int count, std::uint64_t seed) {
  int violations = 0;
  for (int i = 0; i < count; ++i) {
    const ToyReport r = verify_bound_toy(random_toy(seed + static_cast<std::uint64_t>(i)));
    if (!r.bound_holds || !r.intermediate1_holds || !r.intermediate2_holds) {
      ++violations;
      std::printf("toy %d VIOLATED: lhs %.6f rhs %.6f\n", i, r.lhs, r.rhs);
    }
  }
  std::printf("verify-toy: %d instances, %d violations\n", count, violations);
  return violations == 0 ? 0 : 1;
}

int run_sweep(const CommonArgs& args, const std::vector<double>& alphas,
              const std::vector<double>& deltas) {
  const ExperimentConfig base = resolve_config(args);
  const fs::path root = ensure_out_dir(base);

  for (const double alpha : alphas) {
    CommonArgs gen = args;
    const std::string alpha_dir = (root / ("alpha_" + format_double(alpha))).string();
    gen.overrides.push_back("dataset.alpha=" + format_double(alpha));
    gen.overrides.push_back("run.output_dir=" + alpha_dir);
    gen.out_dir.clear();
    if (const int rc = run_gen_data(gen)) return rc;
    if (const int rc = run_build_region(gen, alpha_dir + "/dataset.csv")) return rc;

    for (const double delta : deltas) {
      CommonArgs tr = gen;
      tr.overrides.push_back("pendulum.delta=" + format_double(delta));
      tr.overrides.push_back("run.output_dir=" + alpha_dir + "/delta_" + format_double(delta));
      if (const int rc = run_train(tr, alpha_dir + "/region.json", false)) return rc;
    }
  }
  for (const double delta : deltas) {
    CommonArgs fr = args;
    fr.overrides.push_back("pendulum.delta=" + format_double(delta));
    fr.overrides.push_back("run.output_dir=" +
                           (root / ("free_delta_" + format_double(delta))).string());
    fr.out_dir.clear();
    if (const int rc = run_train(fr, "", true)) return rc;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-link pendulum safe-learning laboratory"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a labeled training dataset");
  add_common(gen, gen_args);

  CommonArgs region_args;
  std::string dataset_path;
  CLI::App* region = app.add_subcommand("build-region", "embed a dataset and learn the region");
  add_common(region, region_args);
  region->add_option("--dataset", dataset_path, "dataset CSV from gen-data")->required();

  CommonArgs train_args;
  std::string train_region_path;
  bool free_learning = false;
  CLI::App* train_cmd = app.add_subcommand("train", "policy-gradient training");
  add_common(train_cmd, train_args);
  train_cmd->add_option("--region", train_region_path, "region JSON from build-region");
  train_cmd->add_flag("--free", free_learning, "train without the supervisor");

  CommonArgs eval_args;
  std::string eval_region_path;
  int grid_size = 10000;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a learned region");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--region", eval_region_path, "region JSON")->required();
  eval_cmd->add_option("--grid-size", grid_size, "number of uniform probes");

  CommonArgs bounds_args;
  std::string bounds_region_path, states_path;
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "estimate the error-bound terms");
  add_common(bounds_cmd, bounds_args);
  bounds_cmd->add_option("--region", bounds_region_path, "region JSON")->required();
  bounds_cmd->add_option("--states", states_path, "visited-states CSV from train")->required();

  int toy_count = 100;
  std::uint64_t toy_seed = 1;
  CLI::App* toy_cmd = app.add_subcommand("verify-toy", "exact bound checks on finite instances");
  toy_cmd->add_option("--count", toy_count, "number of seeded instances");
  toy_cmd->add_option("--seed", toy_seed, "first seed");

  CommonArgs sweep_args;
  std::vector<double> sweep_alphas{0.0, 0.5, 1.0};
  std::vector<double> sweep_deltas{1.1, 1.5, 4.0};
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "full alpha x delta experiment grid");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--alphas", sweep_alphas, "mixing coefficients");
  sweep_cmd->add_option("--deltas", sweep_deltas, "mass mismatch factors");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_data(gen_args);
    if (region->parsed()) return run_build_region(region_args, dataset_path);
    if (train_cmd->parsed()) return run_train(train_args, train_region_path, free_learning);
    if (eval_cmd->parsed()) return run_eval(eval_args, eval_region_path, grid_size);
    if (bounds_cmd->parsed()) return run_bounds(bounds_args, bounds_region_path, states_path);
    if (toy_cmd->parsed()) return run_verify_toy(toy_count, toy_seed);
    if (sweep_cmd->parsed()) return run_sweep(sweep_args, sweep_alphas, sweep_deltas);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
