#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ddsp/data_pipeline.hpp"
#include "ddsp/recurrent.hpp"
#include "json.hpp"

namespace ddsp {

/// A trained network plus what is needed to use it on raw demand.
struct Checkpoint {
    RecurrentModel model;
    Standardizer standardizer;
    std::vector<std::string> zone_ids;
    TrainConfig train;
    std::uint64_t init_seed = 0;
    std::vector<double> history;
    nlohmann::json extra = nlohmann::json::object();
};

/// Writes `manifest` (JSON: spec, tensor table, config, seed) and a sidecar
/// `<manifest stem>.bin` of little-endian float64 parameters in tensor order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& manifest);
Checkpoint load_checkpoint(const std::filesystem::path& manifest);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace ddsp
