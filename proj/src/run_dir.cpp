#include "swamp/run_dir.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "sha1.hpp"
#include "swamp/checkpoint.hpp"
#include "swamp/config_json.hpp"

namespace swamp {

namespace {

void write_manifest(const std::filesystem::path& path, const RunOptions& opts,
                    const std::string& dataset_sha1, std::uint64_t dataset_seed,
                    const RunSummary& summary, double total_seconds,
                    const std::vector<double>& epoch_seconds) {
  nlohmann::ordered_json j;
  j["status"] = summary.completed ? "completed" : "failed";
  if (!summary.completed) j["error"] = summary.error;
  j["config"] = train_config_to_json(opts.config);
  j["dataset"] = {{"path", opts.dataset_path.string()},
                  {"seed", dataset_seed},
                  {"sha1", dataset_sha1}};
  j["outputs"] = {{"metrics_csv", kMetricsName}, {"checkpoint", kCheckpointName}};
  if (summary.completed) {
    j["best"] = {{"epoch", summary.best_epoch}, {"val_r1_pair", summary.best_val_r1}};
  }
  if (opts.eval_test && summary.completed) {
    j["eval"] = {{"test_pair_r1", summary.test_pair_r1},
                 {"test_class_r1", summary.test_class_r1}};
  }
  if (opts.sweep) {
    j["sweep"] = {{"param", opts.sweep->param},
                  {"value", opts.sweep->value},
                  {"seed", opts.sweep->seed}};
  }
  // Wall-clock fields; excluded from determinism comparisons.
  j["wall_time"] = {{"total_seconds", total_seconds},
                    {"per_epoch_seconds", epoch_seconds}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write manifest: {}", path.string()));
  out << j.dump(2) << "\n";
}

}  // namespace

RunSummary execute_run(const RunOptions& opts, bool rethrow_numeric) {
  const PairedDataset ds = load_dataset(opts.dataset_path);
  const std::string sha = git_blob_sha1_of_file(opts.dataset_path);
  return execute_run(ds, sha, opts, rethrow_numeric);
}

RunSummary execute_run(const PairedDataset& ds, const std::string& dataset_sha1,
                       const RunOptions& opts, bool rethrow_numeric) {
  opts.config.validate();
  std::filesystem::create_directories(opts.out_dir);

  RunSummary summary;
  summary.dir = opts.out_dir;

  const std::filesystem::path metrics_path = opts.out_dir / kMetricsName;
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) {
    throw IoError(fmt::format("cannot write metrics: {}", metrics_path.string()));
  }
  metrics << kMetricsHeader << "\n";

  std::vector<double> epoch_seconds;
  TrainCallbacks callbacks;
  callbacks.on_epoch = [&metrics, &epoch_seconds](const EpochRecord& rec) {
    metrics << fmt::format("{},{:.12g},{:.12g},{:.12g},{},{:.3f}\n", rec.epoch,
                           rec.loss_contrastive, rec.loss_swamp, rec.val_r1_pair,
                           rec.is_best ? 1 : 0, rec.seconds);
    epoch_seconds.push_back(rec.seconds);
  };
  if (!opts.quiet) {
    callbacks.on_warning = [](std::string_view msg) {
      std::cerr << "warning: " << msg << "\n";
    };
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrainResult result = train(training_view(ds), opts.config, callbacks);
    metrics.flush();
    save_checkpoint(result.model, opts.config, opts.out_dir / kCheckpointName);
    summary.completed = true;
    summary.best_epoch = result.history.best_epoch;
    summary.best_val_r1 = result.history.best_val_r1;
    if (opts.eval_test) {
      summary.test_pair_r1 =
          evaluate_retrieval(result.model, ds, SplitCode::kTest, Direction::kAToB,
                             RetrievalErrorType::kPair)
              .r_at_1;
      summary.test_class_r1 =
          evaluate_retrieval(result.model, ds, SplitCode::kTest, Direction::kAToB,
                             RetrievalErrorType::kClass)
              .r_at_1;
    }
  } catch (const NumericError& e) {
    metrics.flush();
    summary.completed = false;
    summary.error = e.what();
    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(opts.out_dir / kManifestName, opts, dataset_sha1, ds.seed, summary,
                   total, epoch_seconds);
    if (rethrow_numeric) throw;
    return summary;
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Manifest last, so its presence marks a finished (or failed-with-record) run.
  write_manifest(opts.out_dir / kManifestName, opts, dataset_sha1, ds.seed, summary,
                 total, epoch_seconds);
  return summary;
}

ManifestInfo read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw IoError(fmt::format("cannot open manifest: {}", manifest_path.string()));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: bad manifest JSON: {}", manifest_path.string(),
                                 e.what()));
  }
  ManifestInfo info;
  try {
    info.completed = j.at("status").get<std::string>() == "completed";
    if (j.contains("error")) info.error = j["error"].get<std::string>();
    info.config = train_config_from_json(j.at("config"));
    info.dataset_path = j.at("dataset").at("path").get<std::string>();
    info.dataset_seed = j.at("dataset").at("seed").get<std::uint64_t>();
    info.dataset_sha1 = j.at("dataset").at("sha1").get<std::string>();
    if (j.contains("best")) {
      info.best_epoch = j["best"].at("epoch").get<int>();
      info.best_val_r1 = j["best"].at("val_r1_pair").get<double>();
    }
    if (j.contains("eval")) {
      info.test_pair_r1 = j["eval"].at("test_pair_r1").get<double>();
      info.test_class_r1 = j["eval"].at("test_class_r1").get<double>();
    }
    if (j.contains("sweep")) {
      SweepContext ctx;
      ctx.param = j["sweep"].at("param").get<std::string>();
      ctx.value = j["sweep"].at("value").get<std::string>();
      ctx.seed = j["sweep"].at("seed").get<std::uint64_t>();
      info.sweep = ctx;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: manifest missing field: {}",
                                 manifest_path.string(), e.what()));
  } catch (const ConfigError& e) {
    throw ParseError(fmt::format("{}: manifest config invalid: {}",
                                 manifest_path.string(), e.what()));
  }
  return info;
}

}  // namespace swamp
