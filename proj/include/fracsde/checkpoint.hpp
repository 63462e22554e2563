#pragma once

#include "fracsde/fields.hpp"
#include "fracsde/io.hpp"
#include "fracsde/net.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace fracsde {

struct Checkpoint {
  NeuralField field;
  double clip = 5.0;
  std::optional<AdamState> drift_optimizer;
  std::optional<AdamState> diffusion_optimizer;
  std::string config_hash;
};

Json to_json(const MlpD& net);
MlpD mlp_from_json(const Json& json);
Json to_json(const AdamState& state);
AdamState adam_state_from_json(const Json& json);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fracsde
