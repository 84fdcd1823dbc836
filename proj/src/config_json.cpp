#include "swamp/config_json.hpp"

#include <fmt/format.h>

namespace swamp {

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["num_classes"] = cfg.num_classes;
  j["queue_capacity"] = cfg.queue_capacity;
  j["tau"] = cfg.tau;
  j["eta"] = cfg.eta;
  j["lambda"] = cfg.lambda;
  j["margin"] = cfg.margin;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["embed_dim"] = cfg.embed_dim;
  j["hidden"] = cfg.hidden;
  j["assignment"] = to_string(cfg.assignment);
  j["init"] = to_string(cfg.init);
  j["sk_max_iters"] = cfg.sk_max_iters;
  j["sk_tol"] = cfg.sk_tol;
  j["loss_mode"] = to_string(cfg.loss_mode);
  return j;
}

namespace {

template <typename T>
void read_number(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number()) {
    throw ConfigError(fmt::format("config key '{}' must be a number", key));
  }
  out = v.get<T>();
}

void read_enum(const nlohmann::json& j, const char* key, auto& out, auto parse) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_string()) {
    throw ConfigError(fmt::format("config key '{}' must be a string", key));
  }
  out = parse(v.get<std::string>());
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  static const char* kKnown[] = {"seed",       "num_classes", "queue_capacity",
                                 "tau",        "eta",         "lambda",
                                 "margin",     "lr",          "batch_size",
                                 "epochs",     "embed_dim",   "hidden",
                                 "assignment", "init",        "sk_max_iters",
                                 "sk_tol",     "loss_mode"};
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) {
      throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
  }

  TrainConfig cfg;
  read_number(j, "seed", cfg.seed);
  read_number(j, "num_classes", cfg.num_classes);
  read_number(j, "queue_capacity", cfg.queue_capacity);
  read_number(j, "tau", cfg.tau);
  read_number(j, "eta", cfg.eta);
  read_number(j, "lambda", cfg.lambda);
  read_number(j, "margin", cfg.margin);
  read_number(j, "lr", cfg.lr);
  read_number(j, "batch_size", cfg.batch_size);
  read_number(j, "epochs", cfg.epochs);
  read_number(j, "embed_dim", cfg.embed_dim);
  read_number(j, "hidden", cfg.hidden);
  read_enum(j, "assignment", cfg.assignment,
            [](const std::string& s) { return assign_mode_from_string(s); });
  read_enum(j, "init", cfg.init,
            [](const std::string& s) { return init_mode_from_string(s); });
  read_number(j, "sk_max_iters", cfg.sk_max_iters);
  read_number(j, "sk_tol", cfg.sk_tol);
  read_enum(j, "loss_mode", cfg.loss_mode,
            [](const std::string& s) { return loss_mode_from_string(s); });
  cfg.validate();
  return cfg;
}

}  // namespace swamp
