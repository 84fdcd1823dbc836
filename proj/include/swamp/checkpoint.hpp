#pragma once

#include <filesystem>

#include "swamp/trainer.hpp"

namespace swamp {

// Model checkpoint, bit-exact round trip:
//   "SWCK1\n"
//   one-line JSON header (shapes + full config echo)
//   float32 little-endian payloads in fixed order:
//     encoder A (w1,b1,w2,b2,w3,b3), encoder B (same), prototypes
// Loaded models carry float32-precision weights and fresh optimizer state.
void save_checkpoint(const Model& model, const TrainConfig& cfg,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  Model model;
  TrainConfig config;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace swamp
