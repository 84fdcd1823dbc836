#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swamp/losses.hpp"
#include "swamp/matrix.hpp"
#include "swamp/retrieval.hpp"
#include "swamp/synthgen.hpp"
#include "swamp/tape.hpp"

namespace swamp {

enum class AssignMode { kSoft, kHard };
enum class InitMode { kRandom, kWarmstart };
enum class LossMode { kContrastiveOnly, kSwampCombined };

std::string to_string(AssignMode m);
std::string to_string(InitMode m);
std::string to_string(LossMode m);
AssignMode assign_mode_from_string(std::string_view s);
InitMode init_mode_from_string(std::string_view s);
LossMode loss_mode_from_string(std::string_view s);

struct TrainConfig {
  std::uint64_t seed = 0;
  int num_classes = 1000;
  int queue_capacity = 1280;
  double tau = 0.01;
  double eta = 20.0;  // 1/0.05
  double lambda = 1.0;
  double margin = 0.1;
  double lr = 1e-3;
  int batch_size = 128;
  int epochs = 100;
  int embed_dim = 5;
  int hidden = 50;  // two hidden layers of this width
  AssignMode assignment = AssignMode::kSoft;
  InitMode init = InitMode::kRandom;
  int sk_max_iters = 100;
  double sk_tol = 1e-6;
  LossMode loss_mode = LossMode::kSwampCombined;

  void validate() const;  // throws ConfigError
};

// One modality's feature extractor (input -> hidden -> hidden -> embed, ReLU).
struct EncoderNet {
  ParamTensor w1, b1, w2, b2, w3, b3;

  // Gradient-free forward incl. row normalization (evaluation path).
  Matrix encode(const Matrix& x) const;
};

struct Model {
  EncoderNet encoder_a;
  EncoderNet encoder_b;
  PrototypeBank prototypes;
  int input_dim = 0;
  int hidden = 0;
  int embed_dim = 0;

  Matrix encode_a(const Matrix& x) const { return encoder_a.encode(x); }
  Matrix encode_b(const Matrix& x) const { return encoder_b.encode(x); }
  std::vector<ParamTensor*> all_params();
};

Model make_model(const TrainConfig& cfg, int input_dim);

struct EpochRecord {
  int epoch = 0;  // global, 1-based (continues across warm-start phases)
  int phase = 1;  // 1 = only/primary phase, 2 = swapped-loss phase of warm start
  double loss_contrastive = 0.0;
  double loss_swamp = 0.0;
  double val_r1_pair = 0.0;
  bool is_best = false;
  double seconds = 0.0;  // wall clock, excluded from determinism comparisons
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_r1 = 0.0;
  std::vector<std::uint32_t> queue_occupancy;  // after each batch push
};

// Training-path view of the data: labels are structurally out of reach.
struct TrainingView {
  const Matrix* x_a = nullptr;
  const Matrix* x_b = nullptr;
  std::span<const std::uint8_t> split;
};

TrainingView training_view(const PairedDataset& ds);

struct TrainCallbacks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(std::string_view)> on_warning;
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

// Runs the configured training (dispatching to the warm-start schedule when
// cfg.init requests it) and returns the best-validation-R@1 model snapshot.
TrainResult train(const TrainingView& view, const TrainConfig& cfg,
                  const TrainCallbacks& callbacks = {});

// Contrastive pretraining to its best-validation model, then the combined
// SwAMP objective from those weights with fresh prototypes and optimizer state.
TrainResult warmstart_train(const TrainingView& view, const TrainConfig& cfg,
                            const TrainCallbacks& callbacks = {});

// Cross-modal retrieval metrics of a model on one dataset split.
RetrievalReport evaluate_retrieval(const Model& model, const PairedDataset& ds,
                                   SplitCode split, Direction direction,
                                   RetrievalErrorType error_type);

}  // namespace swamp
