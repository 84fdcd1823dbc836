#pragma once

#include <nlohmann/json.hpp>

#include "swamp/trainer.hpp"

namespace swamp {

// Serializes every TrainConfig field in a fixed key order.
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);

// Strict parse: unknown keys are rejected (naming the key), known keys are
// optional and fall back to their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace swamp
