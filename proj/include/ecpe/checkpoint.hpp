#pragma once

#include "ecpe/model.hpp"
#include "ecpe/vocab.hpp"

#include <json.hpp>

#include <filesystem>

namespace ecpe::checkpoint {

// On-disk layout, all integers little-endian:
//   8 bytes   magic "ECPECKPT"
//   u32       format version (kVersion)
//   u64       header length H
//   H bytes   JSON header: {"version", "model_config", "vocabulary",
//             "metadata", "tensors": [{"name", "rows", "cols", "offset"}]}
//   payload   float64 tensors, column-major, at the listed byte offsets
inline constexpr std::uint32_t kVersion = 1;

struct Checkpoint {
  model::Model model;
  corpus::Vocabulary vocabulary;
  nlohmann::json metadata;
};

nlohmann::json to_json(const model::ModelConfig& config);
model::ModelConfig model_config_from_json(const nlohmann::json& j);

void save(const std::filesystem::path& path, const model::Model& model, const corpus::Vocabulary& vocab,
          const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint load(const std::filesystem::path& path);

}  // namespace ecpe::checkpoint
