#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "srl/bounds.hpp"
#include "srl/corrective.hpp"
#include "srl/datagen.hpp"
#include "srl/safe_region.hpp"
#include "srl/trainer.hpp"
#include "srl/types.hpp"

namespace srl {

// Shortest exactly-round-tripping decimal rendering.
std::string format_double(double v);

// Every artifact starts with the version and the resolved configuration; CSV
// files carry them as leading '#' comment lines, JSON files as fields.

void write_dataset_csv(const std::string& path, const std::vector<TrainingSample>& samples,
                       const nlohmann::json& config_echo);
std::vector<TrainingSample> read_dataset_csv(const std::string& path);

void write_states_csv(const std::string& path, const std::vector<State>& states,
                      const nlohmann::json& config_echo);
std::vector<State> read_states_csv(const std::string& path);

void write_metrics_csv(const std::string& path, const LearningMetrics& metrics,
                       const nlohmann::json& config_echo);

// 2-D histogram of (theta1, dtheta1) over the sampled states.
void write_hist2d_csv(const std::string& path, const std::vector<TrainingSample>& samples,
                      const StateRanges& ranges, int bins, const nlohmann::json& config_echo);

void write_scatter_csv(const std::string& path, const Embedding& embedding,
                       const nlohmann::json& config_echo);

void write_grid_csv(const std::string& path, const RegionGrid& grid,
                    const nlohmann::json& config_echo);

nlohmann::json mnd_to_json(const MndModel& model);
MndModel mnd_from_json(const nlohmann::json& j);

nlohmann::json pendulum_to_json(const PendulumParams& p);
PendulumParams pendulum_from_json(const nlohmann::json& j);

nlohmann::json sim_to_json(const SimConfig& s);
SimConfig sim_from_json(const nlohmann::json& j);

nlohmann::json tsne_config_to_json(const TsneConfig& cfg);
TsneConfig tsne_config_from_json(const nlohmann::json& j);

nlohmann::json embedding_to_json(const Embedding& embedding);
Embedding embedding_from_json(const nlohmann::json& j);

// The region file holds the full provenance: embedding, bandwidth, threshold
// and the corrective gain that produced the labels.
struct RegionFile {
  SafeRegionModel model;
  Eigen::Matrix<double, 3, 6> gain;
};
void save_region(const std::string& path, const SafeRegionModel& model, const FeedbackGain& gain,
                 const nlohmann::json& config_echo);
RegionFile load_region(const std::string& path);

void save_policy(const std::string& path, const TrainResult& result,
                 const nlohmann::json& config_echo);

void save_bound_report(const std::string& path, const BoundReport& report,
                       const nlohmann::json& config_echo);

void save_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json_file(const std::string& path);

}  // namespace srl
