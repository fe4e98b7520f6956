#include "metaradar/checkpoint.hpp"

#include "metaradar/error.hpp"

#include <fstream>

namespace metaradar {

nlohmann::json checkpoint_to_json(const MLPParams& params, const CheckpointMeta& meta) {
  const auto& flat = params.flat();
  return {{"layer_sizes", params.layer_sizes()},
          {"input_scale", params.input_scale()},
          {"params", std::vector<double>(flat.data(), flat.data() + flat.size())},
          {"seed", meta.seed},
          {"stage", meta.stage},
          {"config_hash", meta.config_hash},
          {"extra", meta.extra}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    const auto values = j.at("params").get<std::vector<double>>();
    Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    Checkpoint c{MLPParams(std::move(sizes), std::move(flat), j.value("input_scale", 1.0)), {}};
    c.meta.seed = j.value("seed", std::uint64_t{0});
    c.meta.stage = j.value("stage", std::string{});
    c.meta.config_hash = j.value("config_hash", std::string{});
    c.meta.extra = j.value("extra", nlohmann::json::object());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const MLPParams& params, const CheckpointMeta& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path.string());
  os << checkpoint_to_json(params, meta).dump(1) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingPrerequisite("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint is not valid JSON: " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace metaradar
