#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "swamp/matrix.hpp"
#include "swamp/rng.hpp"

namespace swamp {

inline constexpr int kSynthClasses = 20;
inline constexpr int kSynthPairsPerClass = 500;
inline constexpr int kSynthLatentDim = 5;
inline constexpr int kSynthGenHidden = 50;
inline constexpr int kSynthAmbientDim = 100;
inline constexpr int kSynthTrainCount = 7000;
inline constexpr int kSynthValCount = 1000;
inline constexpr int kSynthTestCount = 2000;
inline constexpr double kSynthClassSigma = 0.1;

enum class SplitCode : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

// Fixed (never trained) two-hidden-layer tanh MLP mapping latents to one
// modality's ambient space.
struct GeneratorNet {
  Matrix w1, b1, w2, b2, w3, b3;  // 5->50->50->100, tanh on hidden layers
  Matrix apply(const Matrix& z) const;
};

GeneratorNet make_generator_net(RngStream& rng);

// Class Gaussians in latent space: means ~ N(0, I), isotropic sigma.
struct GaussianMixture {
  Matrix means;  // n_classes x latent_dim
  double sigma = kSynthClassSigma;
};

GaussianMixture make_mixture(std::uint64_t seed);

// Aligned paired instances with hidden class labels and split codes.
struct PairedDataset {
  Matrix x_a;  // M x 100, values exactly representable in float32
  Matrix x_b;
  std::vector<std::int32_t> labels;
  std::vector<std::uint8_t> split;  // SplitCode per row; empty until assigned
  std::int32_t n_classes = kSynthClasses;
  std::uint64_t seed = 0;

  std::size_t size() const { return x_a.rows(); }
  std::vector<std::uint32_t> rows_in_split(SplitCode code) const;
};

// Deterministic function of the seed: 20 latent Gaussians, 500 pairs each,
// pushed through two fixed generator nets. Split codes are left unassigned.
PairedDataset generate(std::uint64_t seed);

// Random 7000/1000/2000 train/val/test assignment; the permutation is redrawn
// in the (vanishingly rare) case a class is missing from any split.
void assign_splits(PairedDataset& ds, std::uint64_t seed);

// Binary file format, bit-exact round trip:
//   "SWMP1\n"
//   one-line JSON header {"m":...,"dim_a":...,"dim_b":...,"n_classes":...,"seed":...}
//   float32 x_a row-major | float32 x_b | int32 labels | uint8 split codes
// all payload scalars little-endian.
void save_dataset(const PairedDataset& ds, const std::filesystem::path& path);
PairedDataset load_dataset(const std::filesystem::path& path);

}  // namespace swamp
