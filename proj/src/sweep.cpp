#include "swamp/sweep.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "sha1.hpp"
#include "swamp/config_json.hpp"

namespace swamp {

namespace {

int parse_int(const std::string& value, const std::string& param) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(fmt::format("sweep: '{}' is not an integer value for {}", value,
                                  param));
  }
  return out;
}

double parse_double(const std::string& value, const std::string& param) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("sweep: '{}' is not a numeric value for {}", value,
                                  param));
  }
}

}  // namespace

TrainConfig apply_sweep_param(const TrainConfig& base, const std::string& param,
                              const std::string& value) {
  TrainConfig cfg = base;
  if (param == "K") {
    cfg.num_classes = parse_int(value, param);
  } else if (param == "lambda") {
    cfg.lambda = parse_double(value, param);
  } else if (param == "queue") {
    cfg.queue_capacity = parse_int(value, param);
  } else if (param == "eta") {
    cfg.eta = parse_double(value, param);
  } else if (param == "assignment") {
    cfg.assignment = assign_mode_from_string(value);
  } else if (param == "init") {
    cfg.init = init_mode_from_string(value);
  } else {
    std::string allowed;
    for (const char* p : kSweepParams) allowed += fmt::format("{}{}", allowed.empty() ? "" : "|", p);
    throw ConfigError(fmt::format("sweep: unknown param '{}' (allowed: {})", param,
                                  allowed));
  }
  cfg.validate();
  return cfg;
}

namespace {

// A finished directory with a matching config and dataset hash is reused.
bool reusable(const std::filesystem::path& dir, const TrainConfig& cfg,
              const std::string& dataset_sha1, RunSummary& out) {
  const auto manifest_path = dir / kManifestName;
  if (!std::filesystem::exists(manifest_path)) return false;
  try {
    const ManifestInfo info = read_manifest(manifest_path);
    if (!info.completed || info.dataset_sha1 != dataset_sha1) return false;
    if (train_config_to_json(info.config) != train_config_to_json(cfg)) return false;
    if (!info.test_pair_r1 || !info.test_class_r1) return false;
    out.completed = true;
    out.best_epoch = info.best_epoch;
    out.best_val_r1 = info.best_val_r1;
    out.test_pair_r1 = *info.test_pair_r1;
    out.test_class_r1 = *info.test_class_r1;
    out.dir = dir;
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

SweepResult run_sweep(const std::filesystem::path& dataset_path,
                      const TrainConfig& base, const std::string& param,
                      const std::vector<std::string>& values, int n_seeds,
                      const std::filesystem::path& out_dir, int threads, bool quiet) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  if (n_seeds < 1) throw ConfigError("sweep: --seeds must be >= 1");

  const PairedDataset ds = load_dataset(dataset_path);
  const std::string sha = git_blob_sha1_of_file(dataset_path);
  std::filesystem::create_directories(out_dir);

  struct Task {
    TrainConfig cfg;
    std::string value;
    std::uint64_t seed;
    std::filesystem::path dir;
  };
  std::vector<Task> tasks;
  for (const std::string& value : values) {
    for (int s = 0; s < n_seeds; ++s) {
      Task t;
      t.cfg = apply_sweep_param(base, param, value);
      t.cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      t.value = value;
      t.seed = t.cfg.seed;
      t.dir = out_dir / fmt::format("{}={}", param, value) / fmt::format("seed={}", t.seed);
      tasks.push_back(std::move(t));
    }
  }

  std::vector<RunSummary> summaries(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      const Task& task = tasks[idx];
      RunSummary cached;
      if (reusable(task.dir, task.cfg, sha, cached)) {
        summaries[idx] = std::move(cached);
        continue;
      }
      RunOptions opts;
      opts.dataset_path = dataset_path;
      opts.config = task.cfg;
      opts.out_dir = task.dir;
      opts.eval_test = true;
      opts.quiet = quiet;
      opts.sweep = SweepContext{param, task.value, task.seed};
      summaries[idx] = execute_run(ds, sha, opts);
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    result.runs.push_back({param, tasks[i].value, tasks[i].seed, summaries[i]});
  }

  for (const std::string& value : values) {
    std::vector<double> pair_r1, class_r1;
    for (const SweepRunRow& row : result.runs) {
      if (row.value == value && row.summary.completed) {
        pair_r1.push_back(row.summary.test_pair_r1);
        class_r1.push_back(row.summary.test_class_r1);
      }
    }
    auto mean = [](const std::vector<double>& v) {
      double acc = 0.0;
      for (double x : v) acc += x;
      return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
    };
    auto sample_std = [&mean](const std::vector<double>& v) {
      if (v.size() < 2) return 0.0;
      const double mu = mean(v);
      double acc = 0.0;
      for (double x : v) acc += (x - mu) * (x - mu);
      return std::sqrt(acc / static_cast<double>(v.size() - 1));
    };
    SweepSummaryRow row;
    row.param = param;
    row.value = value;
    row.n_runs = static_cast<int>(pair_r1.size());
    row.pair_r1_mean = mean(pair_r1);
    row.pair_r1_std = sample_std(pair_r1);
    row.class_r1_mean = mean(class_r1);
    row.class_r1_std = sample_std(class_r1);
    result.summary.push_back(std::move(row));
  }

  const auto summary_path = out_dir / "summary.csv";
  std::ofstream out(summary_path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", summary_path.string()));
  out << "param,value,n_runs,test_pair_r1_mean,test_pair_r1_std,test_class_r1_mean,"
         "test_class_r1_std\n";
  for (const SweepSummaryRow& row : result.summary) {
    out << fmt::format("{},{},{},{:.12g},{:.12g},{:.12g},{:.12g}\n", row.param,
                       row.value, row.n_runs, row.pair_r1_mean, row.pair_r1_std,
                       row.class_r1_mean, row.class_r1_std);
  }
  return result;
}

std::string render_report(const std::filesystem::path& runs_dir) {
  struct Row {
    std::string param, value;
    std::uint64_t seed;
    ManifestInfo info;
  };
  std::vector<Row> rows;
  std::vector<std::string> warnings;

  std::vector<std::filesystem::path> manifest_paths;
  if (std::filesystem::exists(runs_dir)) {
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(runs_dir)) {
      if (entry.is_regular_file() && entry.path().filename() == kManifestName) {
        manifest_paths.push_back(entry.path());
      }
    }
  }
  std::sort(manifest_paths.begin(), manifest_paths.end());

  for (const auto& path : manifest_paths) {
    try {
      ManifestInfo info = read_manifest(path);
      Row row;
      row.param = info.sweep ? info.sweep->param : "-";
      row.value = info.sweep ? info.sweep->value : "-";
      row.seed = info.sweep ? info.sweep->seed : info.config.seed;
      row.info = std::move(info);
      rows.push_back(std::move(row));
    } catch (const Error& e) {
      warnings.push_back(fmt::format("skipped {}: {}", path.string(), e.what()));
    }
  }

  auto value_key = [](const std::string& v) -> std::pair<int, double> {
    try {
      std::size_t pos = 0;
      const double num = std::stod(v, &pos);
      if (pos == v.size()) return {0, num};
    } catch (const std::exception&) {
    }
    return {1, 0.0};  // non-numeric values sort after numeric ones, by string
  };
  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    if (a.param != b.param) return a.param < b.param;
    const auto ka = value_key(a.value), kb = value_key(b.value);
    if (ka != kb) return ka < kb;
    if (a.value != b.value) return a.value < b.value;
    return a.seed < b.seed;
  });

  std::string md;
  md += "# Run report\n\n";
  md += "| param | value | seed | status | best epoch | val R@1 (pair) | test R@1 "
        "(pair) | test R@1 (class) |\n";
  md += "|---|---|---|---|---|---|---|---|\n";
  for (const Row& row : rows) {
    const ManifestInfo& info = row.info;
    md += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} |\n", row.param,
                      row.value, row.seed, info.completed ? "completed" : "failed",
                      info.completed ? fmt::format("{}", info.best_epoch) : "-",
                      info.completed ? fmt::format("{:.2f}", info.best_val_r1) : "-",
                      info.test_pair_r1 ? fmt::format("{:.2f}", *info.test_pair_r1) : "-",
                      info.test_class_r1 ? fmt::format("{:.2f}", *info.test_class_r1)
                                         : "-");
  }
  if (!warnings.empty()) {
    md += "\n## Warnings\n\n";
    for (const std::string& w : warnings) md += fmt::format("- {}\n", w);
  }
  return md;
}

int sweep_threads_from_env() {
  const char* env = std::getenv("SWAMP_THREADS");
  if (env == nullptr) return 1;
  try {
    const int n = std::stoi(env);
    return std::max(1, n);
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace swamp
