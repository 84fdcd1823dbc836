#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "swamp/synthgen.hpp"
#include "swamp/trainer.hpp"

namespace swamp {

// One training run materialized on disk:
//   <dir>/manifest.json   config snapshot, dataset provenance, outcome
//   <dir>/metrics.csv     per-epoch rows (epoch, losses, val R@1, is_best, seconds)
//   <dir>/model.ckpt      best-validation checkpoint
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kMetricsName = "metrics.csv";
inline constexpr const char* kCheckpointName = "model.ckpt";
inline constexpr const char* kMetricsHeader =
    "epoch,loss_contrastive,loss_swamp,val_r1_pair,is_best,seconds";

struct SweepContext {
  std::string param;
  std::string value;
  std::uint64_t seed = 0;
};

struct RunOptions {
  std::filesystem::path dataset_path;
  TrainConfig config;
  std::filesystem::path out_dir;
  bool eval_test = true;  // record test pair/class R@1 in the manifest
  bool quiet = false;     // suppress queue-size warnings
  std::optional<SweepContext> sweep;
};

struct RunSummary {
  bool completed = false;
  std::string error;
  int best_epoch = 0;
  double best_val_r1 = 0.0;
  double test_pair_r1 = 0.0;
  double test_class_r1 = 0.0;
  std::filesystem::path dir;
};

// Trains per options and writes the run directory. A NumericError during
// training produces a failed manifest (and a rethrow when `rethrow_numeric`),
// any other library error propagates.
RunSummary execute_run(const RunOptions& opts, bool rethrow_numeric = false);

// Same, with the dataset already loaded (its file hash precomputed).
RunSummary execute_run(const PairedDataset& ds, const std::string& dataset_sha1,
                       const RunOptions& opts, bool rethrow_numeric = false);

// Reads the outcome fields back from a run directory's manifest.
struct ManifestInfo {
  bool completed = false;
  std::string error;
  TrainConfig config;
  std::string dataset_path;
  std::uint64_t dataset_seed = 0;
  std::string dataset_sha1;
  int best_epoch = 0;
  double best_val_r1 = 0.0;
  std::optional<double> test_pair_r1;
  std::optional<double> test_class_r1;
  std::optional<SweepContext> sweep;
};
ManifestInfo read_manifest(const std::filesystem::path& manifest_path);

}  // namespace swamp
