#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "swamp/run_dir.hpp"

namespace swamp {

// Parameters reachable by cmd_ablate, mapped onto TrainConfig fields.
inline constexpr const char* kSweepParams[] = {"K",   "lambda",     "queue",
                                               "eta", "assignment", "init"};

// Applies one swept value (as it appears on the command line) to a config
// copy. Unknown parameter names raise ConfigError listing the allowed set.
TrainConfig apply_sweep_param(const TrainConfig& base, const std::string& param,
                              const std::string& value);

struct SweepRunRow {
  std::string param;
  std::string value;
  std::uint64_t seed = 0;
  RunSummary summary;
};

struct SweepSummaryRow {
  std::string param;
  std::string value;
  int n_runs = 0;
  double pair_r1_mean = 0.0;
  double pair_r1_std = 0.0;
  double class_r1_mean = 0.0;
  double class_r1_std = 0.0;
};

struct SweepResult {
  std::vector<SweepRunRow> runs;         // ordered by (value position, seed)
  std::vector<SweepSummaryRow> summary;  // one row per value
};

// Runs one training per (value, seed offset) into
//   <out_dir>/<param>=<value>/seed=<seed>/
// and writes <out_dir>/summary.csv with per-value mean/stddev of test pair and
// class R@1. Seeds are base config seed + 0..n_seeds-1. `threads` caps
// concurrent runs (each run stays single-threaded and isolated). Runs whose
// directory already holds a completed manifest for the same config and dataset
// are reused, which makes sweeps resumable.
SweepResult run_sweep(const std::filesystem::path& dataset_path,
                      const TrainConfig& base, const std::string& param,
                      const std::vector<std::string>& values, int n_seeds,
                      const std::filesystem::path& out_dir, int threads = 1,
                      bool quiet = true);

// Renders every run manifest under `runs_dir` (recursive) as a markdown table
// sorted by (param, value, seed). Corrupt manifests are skipped and listed at
// the end. Returns the report text.
std::string render_report(const std::filesystem::path& runs_dir);

// Reads SWAMP_THREADS (>= 1) or returns 1.
int sweep_threads_from_env();

}  // namespace swamp
