#pragma once

#include "metaradar/mlp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace metaradar {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string stage;        // e.g. "psi_tl", "psi_maml"
  std::string config_hash;
  nlohmann::json extra = nlohmann::json::object();
};

struct Checkpoint {
  MLPParams params;
  CheckpointMeta meta;
};

/// {"layer_sizes": [...], "input_scale", "params": [...], "seed", "stage", "config_hash", "extra"}.
/// Doubles are written in shortest round-trip form so reload is exact.
nlohmann::json checkpoint_to_json(const MLPParams& params, const CheckpointMeta& meta);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void write_checkpoint(const std::filesystem::path& path, const MLPParams& params, const CheckpointMeta& meta);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace metaradar
