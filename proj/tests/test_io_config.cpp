#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "srl/config.hpp"
#include "srl/io.hpp"
#include "srl/rng.hpp"

using namespace srl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "srl_io_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Embedding tiny_embedding() {
  Rng rng(4);
  const StateRanges r = StateRanges::defaults();
  std::vector<State> states(30);
  std::vector<int> labels(30);
  for (int i = 0; i < 30; ++i) {
    for (int d = 0; d < 6; ++d) states[i](d) = rng.uniform(r.lower(d), r.upper(d));
    labels[i] = i % 2;
  }
  TsneConfig cfg;
  cfg.perplexity = 8;
  cfg.iterations = 60;
  cfg.exaggeration_iters = 20;
  cfg.momentum_switch_iter = 20;
  cfg.preview_steps = 0;
  return run_tsne(states, labels, r, cfg, PreviewContext{});
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-12, 12));
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(std::strtod(format_double(0.0).c_str(), nullptr) == 0.0);
}

TEST_CASE("dataset CSV round trip is bit exact") {
  const auto dir = temp_dir();
  Rng rng(2);
  std::vector<TrainingSample> samples;
  for (int i = 0; i < 50; ++i) {
    TrainingSample s;
    for (int d = 0; d < 6; ++d) s.state(d) = rng.normal() * 10;
    s.label = static_cast<int>(rng.uniform_int(2));
    s.provenance = rng.uniform() < 0.5 ? Provenance::ud : Provenance::mnd;
    samples.push_back(s);
  }
  const std::string path = (dir / "roundtrip.csv").string();
  write_dataset_csv(path, samples, nlohmann::json{{"note", "test"}});
  const auto loaded = read_dataset_csv(path);
  REQUIRE(loaded.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].state == samples[i].state);
    CHECK(loaded[i].label == samples[i].label);
    CHECK(loaded[i].provenance == samples[i].provenance);
  }
}

TEST_CASE("states CSV round trip is bit exact") {
  const auto dir = temp_dir();
  Rng rng(3);
  std::vector<State> states(40);
  for (auto& x : states)
    for (int d = 0; d < 6; ++d) x(d) = rng.normal() * std::pow(10.0, rng.uniform(-6, 6));
  const std::string path = (dir / "states.csv").string();
  write_states_csv(path, states, nlohmann::json::object());
  const auto loaded = read_states_csv(path);
  REQUIRE(loaded.size() == states.size());
  for (std::size_t i = 0; i < states.size(); ++i) CHECK(loaded[i] == states[i]);
}

TEST_CASE("region file round trip is bit exact") {
  const auto dir = temp_dir();
  const Embedding emb = tiny_embedding();
  const SafeRegionModel model = SafeRegionModel::create(emb, 0.0, 0.8);
  FeedbackGain gain;
  Rng rng(5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 6; ++j) gain.K(i, j) = rng.normal();

  const std::string path = (dir / "region.json").string();
  save_region(path, model, gain, nlohmann::json{{"alpha", 0.5}});
  const RegionFile loaded = load_region(path);

  CHECK(loaded.model.embedding.source_states == model.embedding.source_states);
  CHECK(loaded.model.embedding.features == model.embedding.features);
  CHECK(loaded.model.embedding.points == model.embedding.points);
  CHECK(loaded.model.embedding.bandwidths == model.embedding.bandwidths);
  CHECK(loaded.model.embedding.labels == model.embedding.labels);
  CHECK(loaded.model.embedding.final_kl == model.embedding.final_kl);
  CHECK(loaded.model.gamma_bandwidth == model.gamma_bandwidth);
  CHECK(loaded.model.p_t == model.p_t);
  CHECK(loaded.gain == gain.K);

  SUBCASE("writing twice produces identical bytes") {
    const std::string again = (dir / "region2.json").string();
    save_region(again, model, gain, nlohmann::json{{"alpha", 0.5}});
    CHECK(slurp(path) == slurp(again));
  }
}

TEST_CASE("mnd json round trip") {
  MndModel m;
  Rng rng(6);
  for (int d = 0; d < 6; ++d) m.mean(d) = rng.normal();
  Eigen::MatrixXd a(6, 6);
  for (int i = 0; i < 36; ++i) a(i / 6, i % 6) = rng.normal();
  m.covariance = a * a.transpose() + 1e-8 * Matrix6d::Identity();
  const MndModel back = mnd_from_json(mnd_to_json(m));
  CHECK(back.mean == m.mean);
  CHECK(back.covariance == m.covariance);
}

TEST_CASE("experiment config defaults and round trip") {
  const ExperimentConfig def;
  CHECK(def.dataset_k == 1000);
  CHECK(def.alpha == 0.5);
  CHECK(def.p_t == 0.8);
  CHECK(def.policy.steps_per_update == 2048);
  CHECK(def.policy.minibatches == 128);
  CHECK(def.policy.learning_rate == 1e-4);
  CHECK(def.policy.discount == 0.99);
  CHECK(def.policy.gae_lambda == 0.95);
  CHECK(def.policy.value_coef == 1.0);
  CHECK(def.policy.grad_clip == 10.0);
  CHECK(def.policy.entropy_coef == 0.0);
  CHECK(def.policy.hidden == 128);
  CHECK(def.pendulum.u_max == 100.0);
  CHECK(def.pendulum.u_min == -100.0);

  const ExperimentConfig back = config_from_json(config_to_json(def));
  CHECK(config_to_json(back) == config_to_json(def));
  CHECK_NOTHROW(back.validate());
}

TEST_CASE("config overrides") {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "dataset.alpha=0.25");
  apply_override(doc, "pendulum.delta=1.5");
  apply_override(doc, "run.output_dir=somewhere");
  apply_override(doc, "run.seeds=[7,8]");
  const ExperimentConfig cfg = config_from_json(doc);
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.pendulum.delta == 1.5);
  CHECK(cfg.output_dir == "somewhere");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8});
  CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST_CASE("invalid configs are rejected") {
  ExperimentConfig cfg;
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.alpha = 0.5;
  cfg.p_t = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.p_t = 0.8;
  cfg.policy.minibatches = 100;  // does not divide 2048
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
