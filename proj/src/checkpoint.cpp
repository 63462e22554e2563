#include "fracsde/checkpoint.hpp"

#include <stdexcept>

namespace fracsde {

Json to_json(const MlpD& net) {
  return Json{{"inputs", net.inputs()},
              {"width", net.width()},
              {"outputs", net.outputs()},
              {"layout", "W1(col-major),b1,W2(col-major),b2"},
              {"params", to_vector(net.params())}};
}

MlpD mlp_from_json(const Json& json) {
  MlpD net(json.at("inputs").get<Eigen::Index>(), json.at("width").get<Eigen::Index>(),
           json.at("outputs").get<Eigen::Index>());
  const auto params = json.at("params").get<std::vector<double>>();
  if (Eigen::Index(params.size()) != net.size()) {
    throw std::runtime_error("checkpoint parameter count does not match shapes");
  }
  net.params() = from_vector(params);
  return net;
}

Json to_json(const AdamState& state) {
  return Json{{"learning_rate", state.config.learning_rate},
              {"weight_decay", state.config.weight_decay},
              {"beta1", state.config.beta1},
              {"beta2", state.config.beta2},
              {"epsilon", state.config.epsilon},
              {"step", state.step},
              {"first_moment", to_vector(state.first_moment)},
              {"second_moment", to_vector(state.second_moment)}};
}

AdamState adam_state_from_json(const Json& json) {
  AdamConfig config;
  config.learning_rate = json.at("learning_rate").get<double>();
  config.weight_decay = json.at("weight_decay").get<double>();
  config.beta1 = json.at("beta1").get<double>();
  config.beta2 = json.at("beta2").get<double>();
  config.epsilon = json.at("epsilon").get<double>();
  AdamState state(0, config);
  state.step = json.at("step").get<std::uint64_t>();
  state.first_moment = from_vector(json.at("first_moment").get<std::vector<double>>());
  state.second_moment = from_vector(json.at("second_moment").get<std::vector<double>>());
  return state;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  Json json{{"kind", "checkpoint"},
            {"config_hash", checkpoint.config_hash},
            {"clip", checkpoint.clip},
            {"drift", to_json(checkpoint.field.drift)},
            {"diffusion", to_json(checkpoint.field.diffusion)}};
  if (checkpoint.drift_optimizer && checkpoint.diffusion_optimizer) {
    json["optimizer"] = Json{{"drift", to_json(*checkpoint.drift_optimizer)},
                             {"diffusion", to_json(*checkpoint.diffusion_optimizer)}};
  }
  write_text(path, dump_json(json));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Json json = Json::parse(read_text(path));
  Checkpoint checkpoint;
  checkpoint.config_hash = json.value("config_hash", "");
  checkpoint.clip = json.at("clip").get<double>();
  checkpoint.field.drift = mlp_from_json(json.at("drift"));
  checkpoint.field.diffusion = mlp_from_json(json.at("diffusion"));
  if (json.contains("optimizer")) {
    checkpoint.drift_optimizer = adam_state_from_json(json.at("optimizer").at("drift"));
    checkpoint.diffusion_optimizer = adam_state_from_json(json.at("optimizer").at("diffusion"));
  }
  return checkpoint;
}

}  // namespace fracsde
