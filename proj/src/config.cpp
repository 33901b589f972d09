#include "srl/config.hpp"

#include "srl/io.hpp"

namespace srl {

namespace {

using nlohmann::json;

}  // namespace

void ExperimentConfig::validate() const {
  pendulum.validate();
  sim.validate();
  ranges.validate();
  dataset_spec().validate();
  policy.validate();
  if (rollout_episodes < 0 || rollout_steps < 1)
    throw ConfigError("rollout budget must be non-negative");
  if (!(p_t > 0 && p_t < 1)) throw ConfigError("p_t must lie strictly inside (0, 1)");
  if (!(gamma_prior >= 0)) throw ConfigError("gamma prior weight must be non-negative");
  if (total_steps < 1) throw ConfigError("total_steps must be positive");
  if (seeds.empty()) throw ConfigError("at least one training seed is required");
  if (!(recovery.horizon > 0) || !(recovery.tolerance > 0))
    throw ConfigError("recovery horizon and tolerance must be positive");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;

  if (j.contains("pendulum")) {
    const json& p = j.at("pendulum");
    c.pendulum.m1 = p.value("m1", c.pendulum.m1);
    c.pendulum.m2 = p.value("m2", c.pendulum.m2);
    c.pendulum.m3 = p.value("m3", c.pendulum.m3);
    c.pendulum.l1 = p.value("l1", c.pendulum.l1);
    c.pendulum.l2 = p.value("l2", c.pendulum.l2);
    c.pendulum.l3 = p.value("l3", c.pendulum.l3);
    c.pendulum.gravity = p.value("gravity", c.pendulum.gravity);
    c.pendulum.u_max = p.value("u_max", c.pendulum.u_max);
    c.pendulum.u_min = p.value("u_min", c.pendulum.u_min);
    c.pendulum.delta = p.value("delta", c.pendulum.delta);
  }
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    c.sim.dt_physics = s.value("dt_physics", c.sim.dt_physics);
    c.sim.dt_control = s.value("dt_control", c.sim.dt_control);
  }
  if (j.contains("ranges")) {
    const json& r = j.at("ranges");
    for (int d = 0; d < 6; ++d) {
      c.ranges.lower(d) = r.at("lower").at(d).get<double>();
      c.ranges.upper(d) = r.at("upper").at(d).get<double>();
    }
  }
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    c.dataset_k = d.value("k", c.dataset_k);
    c.alpha = d.value("alpha", c.alpha);
    c.data_seed = d.value("seed", c.data_seed);
    c.rollout_episodes = d.value("rollout_episodes", c.rollout_episodes);
    c.rollout_steps = d.value("rollout_steps", c.rollout_steps);
  }
  if (j.contains("tsne")) c.tsne = tsne_config_from_json(j.at("tsne"));
  if (j.contains("region")) {
    const json& r = j.at("region");
    c.p_t = r.value("p_t", c.p_t);
    c.gamma_bandwidth = r.value("bandwidth", c.gamma_bandwidth);
    c.gamma_prior = r.value("prior_weight", c.gamma_prior);
  }
  if (j.contains("lqr")) {
    const json& l = j.at("lqr");
    if (l.contains("q_diag"))
      for (int d = 0; d < 6; ++d) c.lqr_q_diag(d) = l.at("q_diag").at(d).get<double>();
    c.lqr_r_scale = l.value("r_scale", c.lqr_r_scale);
    c.recovery.horizon = l.value("recovery_horizon", c.recovery.horizon);
    c.recovery.tolerance = l.value("recovery_tolerance", c.recovery.tolerance);
  }
  if (j.contains("policy")) {
    const json& p = j.at("policy");
    c.policy.hidden = p.value("hidden", c.policy.hidden);
    c.policy.steps_per_update = p.value("steps_per_update", c.policy.steps_per_update);
    c.policy.epochs = p.value("epochs", c.policy.epochs);
    c.policy.minibatches = p.value("minibatches", c.policy.minibatches);
    c.policy.learning_rate = p.value("learning_rate", c.policy.learning_rate);
    c.policy.discount = p.value("discount", c.policy.discount);
    c.policy.gae_lambda = p.value("gae_lambda", c.policy.gae_lambda);
    c.policy.value_coef = p.value("value_coef", c.policy.value_coef);
    c.policy.grad_clip = p.value("grad_clip", c.policy.grad_clip);
    c.policy.entropy_coef = p.value("entropy_coef", c.policy.entropy_coef);
    c.policy.clip_range = p.value("clip_range", c.policy.clip_range);
    c.policy.episode_horizon = p.value("episode_horizon", c.policy.episode_horizon);
  }
  if (j.contains("run")) {
    const json& r = j.at("run");
    c.total_steps = r.value("total_steps", c.total_steps);
    if (r.contains("seeds")) c.seeds = r.at("seeds").get<std::vector<std::uint64_t>>();
    c.output_dir = r.value("output_dir", c.output_dir);
  }
  c.ranges.validate();
  c.recovery.ranges = c.ranges;
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["pendulum"] = {{"m1", c.pendulum.m1},     {"m2", c.pendulum.m2},
                   {"m3", c.pendulum.m3},     {"l1", c.pendulum.l1},
                   {"l2", c.pendulum.l2},     {"l3", c.pendulum.l3},
                   {"gravity", c.pendulum.gravity}, {"u_max", c.pendulum.u_max},
                   {"u_min", c.pendulum.u_min},     {"delta", c.pendulum.delta}};
  j["sim"] = {{"dt_physics", c.sim.dt_physics}, {"dt_control", c.sim.dt_control}};
  j["ranges"] = {{"lower", std::vector<double>(c.ranges.lower.data(), c.ranges.lower.data() + 6)},
                 {"upper", std::vector<double>(c.ranges.upper.data(), c.ranges.upper.data() + 6)}};
  j["dataset"] = {{"k", c.dataset_k},
                  {"alpha", c.alpha},
                  {"seed", c.data_seed},
                  {"rollout_episodes", c.rollout_episodes},
                  {"rollout_steps", c.rollout_steps}};
  j["tsne"] = tsne_config_to_json(c.tsne);
  j["region"] = {
      {"p_t", c.p_t}, {"bandwidth", c.gamma_bandwidth}, {"prior_weight", c.gamma_prior}};
  j["lqr"] = {{"q_diag", std::vector<double>(c.lqr_q_diag.data(), c.lqr_q_diag.data() + 6)},
              {"r_scale", c.lqr_r_scale},
              {"recovery_horizon", c.recovery.horizon},
              {"recovery_tolerance", c.recovery.tolerance}};
  j["policy"] = {{"hidden", c.policy.hidden},
                 {"steps_per_update", c.policy.steps_per_update},
                 {"epochs", c.policy.epochs},
                 {"minibatches", c.policy.minibatches},
                 {"learning_rate", c.policy.learning_rate},
                 {"discount", c.policy.discount},
                 {"gae_lambda", c.policy.gae_lambda},
                 {"value_coef", c.policy.value_coef},
                 {"grad_clip", c.policy.grad_clip},
                 {"entropy_coef", c.policy.entropy_coef},
                 {"clip_range", c.policy.clip_range},
                 {"episode_horizon", c.policy.episode_horizon}};
  j["run"] = {{"total_steps", c.total_steps}, {"seeds", c.seeds}, {"output_dir", c.output_dir}};
  return j;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("empty key in override: " + assignment);
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace srl
