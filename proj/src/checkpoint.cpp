#include "swamp/checkpoint.hpp"

#include <fmt/format.h>

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <vector>

#include "swamp/config_json.hpp"

namespace swamp {

namespace {

constexpr char kCheckpointMagic[4] = {'S', 'W', 'C', 'K'};
constexpr char kCheckpointVersion = '1';

std::vector<const ParamTensor*> payload_order(const Model& model) {
  return {&model.encoder_a.w1, &model.encoder_a.b1, &model.encoder_a.w2,
          &model.encoder_a.b2, &model.encoder_a.w3, &model.encoder_a.b3,
          &model.encoder_b.w1, &model.encoder_b.b1, &model.encoder_b.w2,
          &model.encoder_b.b2, &model.encoder_b.w3, &model.encoder_b.b3,
          &model.prototypes.p};
}

std::vector<ParamTensor*> payload_order_mut(Model& model) {
  return {&model.encoder_a.w1, &model.encoder_a.b1, &model.encoder_a.w2,
          &model.encoder_a.b2, &model.encoder_a.w3, &model.encoder_a.b3,
          &model.encoder_b.w1, &model.encoder_b.b1, &model.encoder_b.w2,
          &model.encoder_b.b2, &model.encoder_b.w3, &model.encoder_b.b3,
          &model.prototypes.p};
}

}  // namespace

void save_checkpoint(const Model& model, const TrainConfig& cfg,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(fmt::format("cannot open for writing: {}", path.string()));
  }
  out.write(kCheckpointMagic, 4);
  out.put(kCheckpointVersion);
  out.put('\n');

  nlohmann::ordered_json header;
  header["input_dim"] = model.input_dim;
  header["hidden"] = model.hidden;
  header["embed_dim"] = model.embed_dim;
  header["num_classes"] = model.prototypes.num_classes();
  header["config"] = train_config_to_json(cfg);
  const std::string line = header.dump() + "\n";
  out.write(line.data(), static_cast<std::streamsize>(line.size()));

  for (const ParamTensor* p : payload_order(model)) {
    std::vector<float> buf(p->value.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = static_cast<float>(p->value.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  out.flush();
  if (!out) {
    throw IoError(fmt::format("write failed: {}", path.string()));
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open for reading: {}", path.string()));
  }
  char magic[6];
  in.read(magic, 6);
  if (in.gcount() != 6) {
    throw TruncationError(fmt::format("{}: file shorter than magic", path.string()));
  }
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw MagicError(fmt::format("{}: bad magic, not a checkpoint file", path.string()));
  }
  if (magic[4] != kCheckpointVersion) {
    throw VersionError(fmt::format("{}: unsupported checkpoint version '{}'",
                                   path.string(), magic[4]));
  }
  if (magic[5] != '\n') {
    throw MagicError(fmt::format("{}: malformed magic terminator", path.string()));
  }

  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw TruncationError(fmt::format("{}: missing JSON header line", path.string()));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: bad JSON header: {}", path.string(), e.what()));
  }
  for (const char* key : {"input_dim", "hidden", "embed_dim", "num_classes", "config"}) {
    if (!header.contains(key)) {
      throw ParseError(fmt::format("{}: header missing key '{}'", path.string(), key));
    }
  }

  LoadedCheckpoint loaded;
  try {
    loaded.config = train_config_from_json(header["config"]);
  } catch (const ConfigError& e) {
    throw ParseError(fmt::format("{}: bad embedded config: {}", path.string(), e.what()));
  }
  const int input_dim = header["input_dim"].get<int>();
  loaded.model = make_model(loaded.config, input_dim);
  if (header["hidden"].get<int>() != loaded.model.hidden ||
      header["embed_dim"].get<int>() != loaded.model.embed_dim ||
      header["num_classes"].get<std::size_t>() != loaded.model.prototypes.num_classes()) {
    throw ParseError(fmt::format("{}: header shapes disagree with embedded config",
                                 path.string()));
  }

  for (ParamTensor* p : payload_order_mut(loaded.model)) {
    std::vector<float> buf(p->value.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got != buf.size() * sizeof(float)) {
      throw TruncationError(
          fmt::format("{}: truncated parameter payload, expected {} bytes, got {}",
                      path.string(), buf.size() * sizeof(float), got));
    }
    for (std::size_t i = 0; i < buf.size(); ++i)
      p->value.data()[i] = static_cast<double>(buf[i]);
    p->grad.fill(0.0);
    p->adam_m.fill(0.0);
    p->adam_v.fill(0.0);
    p->step_count = 0;
  }
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0) {
    throw ParseError(fmt::format("{}: unexpected trailing bytes", path.string()));
  }
  return loaded;
}

}  // namespace swamp
