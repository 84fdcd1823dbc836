#include "swamp/synthgen.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "dataset serialization assumes a little-endian host");

namespace swamp {

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

Matrix tanh_map(Matrix m) {
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = std::tanh(m.data()[i]);
  return m;
}

void quantize_to_f32(Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

}  // namespace

Matrix GeneratorNet::apply(const Matrix& z) const {
  Matrix h1 = tanh_map(add_row_broadcast(matmul(z, w1), b1));
  Matrix h2 = tanh_map(add_row_broadcast(matmul(h1, w2), b2));
  return add_row_broadcast(matmul(h2, w3), b3);
}

GeneratorNet make_generator_net(RngStream& rng) {
  GeneratorNet net;
  net.w1 = glorot_uniform(kSynthLatentDim, kSynthGenHidden, rng);
  net.b1 = Matrix(1, kSynthGenHidden);
  net.w2 = glorot_uniform(kSynthGenHidden, kSynthGenHidden, rng);
  net.b2 = Matrix(1, kSynthGenHidden);
  net.w3 = glorot_uniform(kSynthGenHidden, kSynthAmbientDim, rng);
  net.b3 = Matrix(1, kSynthAmbientDim);
  return net;
}

GaussianMixture make_mixture(std::uint64_t seed) {
  RngStream rng(seed, "synth/gaussians");
  GaussianMixture mix;
  mix.means = Matrix(kSynthClasses, kSynthLatentDim);
  for (std::size_t i = 0; i < mix.means.size(); ++i) mix.means.data()[i] = rng.normal();
  mix.sigma = kSynthClassSigma;
  return mix;
}

std::vector<std::uint32_t> PairedDataset::rows_in_split(SplitCode code) const {
  std::vector<std::uint32_t> rows;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == static_cast<std::uint8_t>(code))
      rows.push_back(static_cast<std::uint32_t>(i));
  }
  return rows;
}

PairedDataset generate(std::uint64_t seed) {
  const GaussianMixture mix = make_mixture(seed);
  RngStream weights_a(seed, "synth/gen_weights_a");
  RngStream weights_b(seed, "synth/gen_weights_b");
  const GeneratorNet f_a = make_generator_net(weights_a);
  const GeneratorNet f_b = make_generator_net(weights_b);

  const std::size_t total =
      static_cast<std::size_t>(kSynthClasses) * kSynthPairsPerClass;
  Matrix latents(total, kSynthLatentDim);
  PairedDataset ds;
  ds.labels.resize(total);
  ds.seed = seed;

  RngStream latent_rng(seed, "synth/latents");
  std::size_t row = 0;
  for (int c = 0; c < kSynthClasses; ++c) {
    for (int s = 0; s < kSynthPairsPerClass; ++s, ++row) {
      for (int d = 0; d < kSynthLatentDim; ++d) {
        latents(row, d) = mix.means(c, d) + mix.sigma * latent_rng.normal();
      }
      ds.labels[row] = c;
    }
  }

  ds.x_a = f_a.apply(latents);
  ds.x_b = f_b.apply(latents);
  // Stored files carry float32 payloads; quantizing here makes the in-memory
  // dataset and its on-disk round trip bit-identical.
  quantize_to_f32(ds.x_a);
  quantize_to_f32(ds.x_b);
  return ds;
}

void assign_splits(PairedDataset& ds, std::uint64_t seed) {
  const std::size_t m = ds.size();
  if (m != static_cast<std::size_t>(kSynthClasses) * kSynthPairsPerClass) {
    throw ShapeError(fmt::format("assign_splits: expected {} rows, got {}",
                                 kSynthClasses * kSynthPairsPerClass, m));
  }
  RngStream rng(seed, "synth/split");
  std::vector<std::uint32_t> perm(m);
  for (std::size_t i = 0; i < m; ++i) perm[i] = static_cast<std::uint32_t>(i);

  for (;;) {
    rng.shuffle(perm);
    std::vector<std::uint8_t> split(m);
    for (std::size_t p = 0; p < m; ++p) {
      const std::uint8_t code = p < kSynthTrainCount                    ? 0
                                : p < kSynthTrainCount + kSynthValCount ? 1
                                                                        : 2;
      split[perm[p]] = code;
    }
    // Every class must appear in every split.
    bool seen[3][kSynthClasses] = {};
    for (std::size_t i = 0; i < m; ++i) seen[split[i]][ds.labels[i]] = true;
    bool complete = true;
    for (int s = 0; s < 3 && complete; ++s)
      for (int c = 0; c < kSynthClasses; ++c) complete = complete && seen[s][c];
    if (complete) {
      ds.split = std::move(split);
      return;
    }
  }
}

namespace {

constexpr char kDatasetMagic[4] = {'S', 'W', 'M', 'P'};
constexpr char kDatasetVersion = '1';

void write_exact(std::ofstream& out, const void* data, std::size_t bytes,
                 const std::filesystem::path& path) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) {
    throw IoError(fmt::format("write failed: {}", path.string()));
  }
}

void read_payload(std::ifstream& in, void* data, std::size_t bytes, const char* section,
                  const std::filesystem::path& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != bytes) {
    throw TruncationError(fmt::format(
        "{}: truncated {} section, expected {} bytes, got {}", path.string(), section,
        bytes, got));
  }
}

}  // namespace

void save_dataset(const PairedDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(fmt::format("cannot open for writing: {}", path.string()));
  }
  out.write(kDatasetMagic, 4);
  out.put(kDatasetVersion);
  out.put('\n');

  nlohmann::ordered_json header;
  header["m"] = ds.size();
  header["dim_a"] = ds.x_a.cols();
  header["dim_b"] = ds.x_b.cols();
  header["n_classes"] = ds.n_classes;
  header["seed"] = ds.seed;
  const std::string header_line = header.dump() + "\n";
  write_exact(out, header_line.data(), header_line.size(), path);

  auto write_f32 = [&](const Matrix& m) {
    std::vector<float> buf(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      buf[i] = static_cast<float>(m.data()[i]);
    write_exact(out, buf.data(), buf.size() * sizeof(float), path);
  };
  write_f32(ds.x_a);
  write_f32(ds.x_b);
  write_exact(out, ds.labels.data(), ds.labels.size() * sizeof(std::int32_t), path);
  write_exact(out, ds.split.data(), ds.split.size() * sizeof(std::uint8_t), path);
  out.flush();
  if (!out) {
    throw IoError(fmt::format("write failed: {}", path.string()));
  }
}

PairedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open for reading: {}", path.string()));
  }
  char magic[6];
  in.read(magic, 6);
  if (in.gcount() != 6) {
    throw TruncationError(fmt::format("{}: file shorter than magic", path.string()));
  }
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
    throw MagicError(fmt::format("{}: bad magic, not a dataset file", path.string()));
  }
  if (magic[4] != kDatasetVersion) {
    throw VersionError(fmt::format("{}: unsupported dataset version '{}'", path.string(),
                                   magic[4]));
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
  for (const char* key : {"m", "dim_a", "dim_b", "n_classes", "seed"}) {
    if (!header.contains(key)) {
      throw ParseError(fmt::format("{}: header missing key '{}'", path.string(), key));
    }
  }
  const std::size_t m = header["m"].get<std::size_t>();
  const std::size_t dim_a = header["dim_a"].get<std::size_t>();
  const std::size_t dim_b = header["dim_b"].get<std::size_t>();

  PairedDataset ds;
  ds.n_classes = header["n_classes"].get<std::int32_t>();
  ds.seed = header["seed"].get<std::uint64_t>();
  ds.x_a = Matrix(m, dim_a);
  ds.x_b = Matrix(m, dim_b);
  ds.labels.resize(m);
  ds.split.resize(m);

  auto read_f32 = [&](Matrix& dst, const char* section) {
    std::vector<float> buf(dst.size());
    read_payload(in, buf.data(), buf.size() * sizeof(float), section, path);
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst.data()[i] = static_cast<double>(buf[i]);
    if (!dst.all_finite()) {
      throw ParseError(fmt::format("{}: non-finite value in {} section", path.string(),
                                   section));
    }
  };
  read_f32(ds.x_a, "x_a");
  read_f32(ds.x_b, "x_b");
  read_payload(in, ds.labels.data(), m * sizeof(std::int32_t), "labels", path);
  read_payload(in, ds.split.data(), m * sizeof(std::uint8_t), "split", path);

  char extra;
  if (in.read(&extra, 1); in.gcount() != 0) {
    throw ParseError(fmt::format("{}: unexpected trailing bytes", path.string()));
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (ds.labels[i] < 0 || ds.labels[i] >= ds.n_classes) {
      throw ParseError(fmt::format("{}: label {} out of range at row {}", path.string(),
                                   ds.labels[i], i));
    }
    if (ds.split[i] > 2) {
      throw ParseError(fmt::format("{}: invalid split code {} at row {}", path.string(),
                                   ds.split[i], i));
    }
  }
  return ds;
}

}  // namespace swamp
