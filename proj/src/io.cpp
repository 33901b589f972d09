#include "srl/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "srl/version.hpp"

namespace srl {

namespace {

using nlohmann::json;

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << contents;
  if (!out) throw ConfigError("write failed: " + path);
}

std::string csv_header(const json& config_echo) {
  std::ostringstream os;
  os << "# version: " << kVersion << "\n";
  os << "# config: " << config_echo.dump() << "\n";
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  return out;
}

// Lines of a CSV file, comments and the header row stripped.
std::vector<std::string> data_lines(const std::string& path, const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  std::vector<std::string> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != expected_header)
        throw ConfigError("unexpected header in " + path + ": " + line);
      header_seen = true;
      continue;
    }
    out.push_back(line);
  }
  if (!header_seen) throw ConfigError("missing header row in " + path);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset_csv(const std::string& path, const std::vector<TrainingSample>& samples,
                       const json& config_echo) {
  std::ostringstream os;
  os << csv_header(config_echo);
  os << "theta1,theta2,theta3,dtheta1,dtheta2,dtheta3,label,provenance\n";
  for (const TrainingSample& s : samples) {
    for (int d = 0; d < 6; ++d) os << format_double(s.state(d)) << ',';
    os << s.label << ',' << (s.provenance == Provenance::ud ? "ud" : "mnd") << "\n";
  }
  write_file(path, os.str());
}

std::vector<TrainingSample> read_dataset_csv(const std::string& path) {
  std::vector<TrainingSample> out;
  for (const std::string& line :
       data_lines(path, "theta1,theta2,theta3,dtheta1,dtheta2,dtheta3,label,provenance")) {
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw ConfigError("malformed dataset row: " + line);
    TrainingSample s;
    for (int d = 0; d < 6; ++d) s.state(d) = std::stod(f[d]);
    s.label = std::stoi(f[6]);
    s.provenance = f[7] == "ud" ? Provenance::ud : Provenance::mnd;
    out.push_back(s);
  }
  return out;
}

void write_states_csv(const std::string& path, const std::vector<State>& states,
                      const json& config_echo) {
  std::ostringstream os;
  os << csv_header(config_echo);
  os << "theta1,theta2,theta3,dtheta1,dtheta2,dtheta3\n";
  for (const State& x : states) {
    for (int d = 0; d < 6; ++d) os << format_double(x(d)) << (d == 5 ? '\n' : ',');
  }
  write_file(path, os.str());
}

std::vector<State> read_states_csv(const std::string& path) {
  std::vector<State> out;
  for (const std::string& line :
       data_lines(path, "theta1,theta2,theta3,dtheta1,dtheta2,dtheta3")) {
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw ConfigError("malformed state row: " + line);
    State x;
    for (int d = 0; d < 6; ++d) x(d) = std::stod(f[d]);
    out.push_back(x);
  }
  return out;
}

void write_metrics_csv(const std::string& path, const LearningMetrics& metrics,
                       const json& config_echo) {
  std::ostringstream os;
  os << csv_header(config_echo);
  os << "update,env_steps,mean_reward,activations,failures,violations\n";
  for (const MetricsRow& r : metrics.rows) {
    os << r.update << ',' << r.env_steps << ',' << format_double(r.mean_reward) << ','
       << r.activations << ',' << r.failures << ',' << r.violations << "\n";
  }
  write_file(path, os.str());
}

void write_hist2d_csv(const std::string& path, const std::vector<TrainingSample>& samples,
                      const StateRanges& ranges, int bins, const json& config_echo) {
  const double lo1 = ranges.lower(0), hi1 = ranges.upper(0);
  const double lo2 = ranges.lower(3), hi2 = ranges.upper(3);
  std::vector<long> counts(static_cast<std::size_t>(bins) * bins, 0);
  for (const TrainingSample& s : samples) {
    int b1 = static_cast<int>((s.state(0) - lo1) / (hi1 - lo1) * bins);
    int b2 = static_cast<int>((s.state(3) - lo2) / (hi2 - lo2) * bins);
    b1 = std::clamp(b1, 0, bins - 1);
    b2 = std::clamp(b2, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b1) * bins + b2];
  }
  std::ostringstream os;
  os << csv_header(config_echo);
  os << "theta1_lo,theta1_hi,dtheta1_lo,dtheta1_hi,count\n";
  const double w1 = (hi1 - lo1) / bins, w2 = (hi2 - lo2) / bins;
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) {
      os << format_double(lo1 + i * w1) << ',' << format_double(lo1 + (i + 1) * w1) << ','
         << format_double(lo2 + j * w2) << ',' << format_double(lo2 + (j + 1) * w2) << ','
         << counts[static_cast<std::size_t>(i) * bins + j] << "\n";
    }
  write_file(path, os.str());
}

void write_scatter_csv(const std::string& path, const Embedding& embedding,
                       const json& config_echo) {
  std::ostringstream os;
  os << csv_header(config_echo);
  os << "y1,y2,label\n";
  for (int i = 0; i < embedding.size(); ++i) {
    os << format_double(embedding.points(i, 0)) << ','
       << format_double(embedding.points.cols() > 1 ? embedding.points(i, 1) : 0.0) << ','
       << embedding.labels[i] << "\n";
  }
  write_file(path, os.str());
}

void write_grid_csv(const std::string& path, const RegionGrid& grid, const json& config_echo) {
  std::ostringstream os;
  os << csv_header(config_echo);
  os << "y1,y2,gamma\n";
  for (Eigen::Index i = 0; i < grid.axis1.size(); ++i)
    for (Eigen::Index j = 0; j < grid.axis2.size(); ++j)
      os << format_double(grid.axis1(i)) << ',' << format_double(grid.axis2(j)) << ','
         << format_double(grid.values(i, j)) << "\n";
  write_file(path, os.str());
}

json mnd_to_json(const MndModel& model) {
  json j;
  j["mean"] = vector_to_json(model.mean);
  json cov = json::array();
  for (int i = 0; i < 6; ++i)
    for (int c = 0; c < 6; ++c) cov.push_back(model.covariance(i, c));
  j["covariance"] = cov;  // row-major
  return j;
}

MndModel mnd_from_json(const json& j) {
  MndModel m;
  const Eigen::VectorXd mean = vector_from_json(j.at("mean"));
  if (mean.size() != 6) throw ConfigError("mnd mean must have six entries");
  m.mean = mean;
  const json& cov = j.at("covariance");
  if (cov.size() != 36) throw ConfigError("mnd covariance must have 36 entries");
  for (int i = 0; i < 6; ++i)
    for (int c = 0; c < 6; ++c) m.covariance(i, c) = cov.at(i * 6 + c).get<double>();
  return m;
}

json pendulum_to_json(const PendulumParams& p) {
  return json{{"m1", p.m1}, {"m2", p.m2}, {"m3", p.m3},     {"l1", p.l1},
              {"l2", p.l2}, {"l3", p.l3}, {"gravity", p.gravity}, {"u_max", p.u_max},
              {"u_min", p.u_min}, {"delta", p.delta}};
}

PendulumParams pendulum_from_json(const json& j) {
  PendulumParams p;
  p.m1 = j.value("m1", p.m1);
  p.m2 = j.value("m2", p.m2);
  p.m3 = j.value("m3", p.m3);
  p.l1 = j.value("l1", p.l1);
  p.l2 = j.value("l2", p.l2);
  p.l3 = j.value("l3", p.l3);
  p.gravity = j.value("gravity", p.gravity);
  p.u_max = j.value("u_max", p.u_max);
  p.u_min = j.value("u_min", p.u_min);
  p.delta = j.value("delta", p.delta);
  return p;
}

json sim_to_json(const SimConfig& s) {
  return json{{"dt_physics", s.dt_physics}, {"dt_control", s.dt_control}};
}

SimConfig sim_from_json(const json& j) {
  SimConfig s;
  s.dt_physics = j.value("dt_physics", s.dt_physics);
  s.dt_control = j.value("dt_control", s.dt_control);
  return s;
}

json tsne_config_to_json(const TsneConfig& cfg) {
  return json{{"perplexity", cfg.perplexity},
              {"output_dim", cfg.output_dim},
              {"iterations", cfg.iterations},
              {"learning_rate", cfg.learning_rate},
              {"exaggeration", cfg.exaggeration},
              {"exaggeration_iters", cfg.exaggeration_iters},
              {"momentum_initial", cfg.momentum_initial},
              {"momentum_final", cfg.momentum_final},
              {"momentum_switch_iter", cfg.momentum_switch_iter},
              {"preview_steps", cfg.preview_steps},
              {"preview_stride", cfg.preview_stride},
              {"preview_weight", cfg.preview_weight},
              {"seed", cfg.seed}};
}

TsneConfig tsne_config_from_json(const json& j) {
  TsneConfig cfg;
  cfg.perplexity = j.value("perplexity", cfg.perplexity);
  cfg.output_dim = j.value("output_dim", cfg.output_dim);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.exaggeration = j.value("exaggeration", cfg.exaggeration);
  cfg.exaggeration_iters = j.value("exaggeration_iters", cfg.exaggeration_iters);
  cfg.momentum_initial = j.value("momentum_initial", cfg.momentum_initial);
  cfg.momentum_final = j.value("momentum_final", cfg.momentum_final);
  cfg.momentum_switch_iter = j.value("momentum_switch_iter", cfg.momentum_switch_iter);
  cfg.preview_steps = j.value("preview_steps", cfg.preview_steps);
  cfg.preview_stride = j.value("preview_stride", cfg.preview_stride);
  cfg.preview_weight = j.value("preview_weight", cfg.preview_weight);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

json embedding_to_json(const Embedding& embedding) {
  json j;
  j["source_states"] = matrix_to_json(embedding.source_states);
  j["features"] = matrix_to_json(embedding.features);
  j["points"] = matrix_to_json(embedding.points);
  j["bandwidths"] = vector_to_json(embedding.bandwidths);
  j["labels"] = embedding.labels;
  j["ranges_lower"] = vector_to_json(embedding.ranges.lower);
  j["ranges_upper"] = vector_to_json(embedding.ranges.upper);
  j["tsne_config"] = tsne_config_to_json(embedding.config);
  j["preview_gain"] = matrix_to_json(embedding.context.gain.K);
  j["preview_params"] = pendulum_to_json(embedding.context.params);
  j["preview_sim"] = sim_to_json(embedding.context.sim);
  j["final_kl"] = embedding.final_kl;
  return j;
}

Embedding embedding_from_json(const json& j) {
  Embedding e;
  e.source_states = matrix_from_json(j.at("source_states"));
  e.features = matrix_from_json(j.at("features"));
  e.points = matrix_from_json(j.at("points"));
  e.bandwidths = vector_from_json(j.at("bandwidths"));
  e.labels = j.at("labels").get<std::vector<int>>();
  e.ranges.lower = vector_from_json(j.at("ranges_lower"));
  e.ranges.upper = vector_from_json(j.at("ranges_upper"));
  e.config = tsne_config_from_json(j.at("tsne_config"));
  const Eigen::MatrixXd gain = matrix_from_json(j.at("preview_gain"));
  if (gain.rows() != 3 || gain.cols() != 6) throw ConfigError("preview gain must be 3x6");
  e.context.gain.K = gain;
  e.context.params = pendulum_from_json(j.at("preview_params"));
  e.context.sim = sim_from_json(j.at("preview_sim"));
  e.final_kl = j.at("final_kl").get<double>();
  return e;
}

void save_region(const std::string& path, const SafeRegionModel& model, const FeedbackGain& gain,
                 const json& config_echo) {
  json j;
  j["version"] = kVersion;
  j["config"] = config_echo;
  j["embedding"] = embedding_to_json(model.embedding);
  j["gamma_bandwidth"] = model.gamma_bandwidth;
  j["p_t"] = model.p_t;
  j["prior_weight"] = model.prior_weight;
  j["gain"] = matrix_to_json(gain.K);
  save_json_file(path, j);
}

RegionFile load_region(const std::string& path) {
  const json j = load_json_file(path);
  RegionFile out;
  out.model = SafeRegionModel::create(embedding_from_json(j.at("embedding")),
                                      j.at("gamma_bandwidth").get<double>(),
                                      j.at("p_t").get<double>(),
                                      j.value("prior_weight", 1.0));
  const Eigen::MatrixXd k = matrix_from_json(j.at("gain"));
  if (k.rows() != 3 || k.cols() != 6) throw ConfigError("region gain must be 3x6");
  out.gain = k;
  return out;
}

void save_policy(const std::string& path, const TrainResult& result, const json& config_echo) {
  json j;
  j["version"] = kVersion;
  j["config"] = config_echo;
  j["obs_dim"] = kObsDim;
  j["act_dim"] = 3;
  j["hidden"] = result.config.hidden;

  // slice the flat parameter vector into named tensors; the layout matches
  // the policy's construction order
  const int h = result.config.hidden;
  const Eigen::VectorXd& theta = result.policy_params;
  long off = 0;
  json layers = json::array();
  auto emit = [&](const std::string& name, int rows, int cols) {
    json layer;
    layer["name"] = name;
    layer["shape"] = json::array({rows, cols});
    json values = json::array();
    for (int i = 0; i < rows * cols; ++i) values.push_back(theta(off + i));
    layer["values"] = values;  // column-major
    layers.push_back(layer);
    off += rows * cols;
  };
  for (const std::string& net : {std::string("actor"), std::string("critic")}) {
    const int out = net == "actor" ? 3 : 1;
    emit(net + ".w1", h, kObsDim);
    emit(net + ".b1", h, 1);
    emit(net + ".w2", h, h);
    emit(net + ".b2", h, 1);
    emit(net + ".w3", out, h);
    emit(net + ".b3", out, 1);
  }
  emit("log_std", 3, 1);
  if (off != theta.size()) throw ConfigError("policy parameter layout mismatch");
  j["layers"] = layers;
  save_json_file(path, j);
}

void save_bound_report(const std::string& path, const BoundReport& r, const json& config_echo) {
  json j;
  j["version"] = kVersion;
  j["config"] = config_echo;
  j["eps_hat"] = r.eps_hat;
  j["eps_n_hat"] = r.eps_n_hat;
  j["e1_hat"] = r.e1_hat;
  j["e2_hat"] = r.e2_hat;
  j["div_proxy"] = r.div_proxy;
  j["fp_rate"] = r.fp_rate;
  j["fn_rate"] = r.fn_rate;
  j["n_samples_d"] = r.n_samples_d;
  j["n_samples_dn"] = r.n_samples_dn;
  j["seed"] = r.seed;
  std::ostringstream text;
  text << "generalization error " << format_double(r.eps_hat)
       << " <= source error " << format_double(r.eps_n_hat) << " + divergence/2 "
       << format_double(r.div_proxy / 2) << " + min(E1, E2) "
       << format_double(std::min(r.e1_hat, r.e2_hat)) << " = "
       << format_double(r.eps_n_hat + r.div_proxy / 2 + std::min(r.e1_hat, r.e2_hat))
       << " (divergence term is a finite-sample proxy)";
  j["theorem_text"] = text.str();
  save_json_file(path, j);
}

void save_json_file(const std::string& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace srl
