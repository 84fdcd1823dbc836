#include "swamp/trainer.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>

#include "swamp/feature_queue.hpp"
#include "swamp/optimizer.hpp"
#include "swamp/sinkhorn.hpp"

namespace swamp {

std::string to_string(AssignMode m) { return m == AssignMode::kSoft ? "soft" : "hard"; }
std::string to_string(InitMode m) {
  return m == InitMode::kRandom ? "random" : "warmstart";
}
std::string to_string(LossMode m) {
  return m == LossMode::kContrastiveOnly ? "contrastive_only" : "swamp_combined";
}

AssignMode assign_mode_from_string(std::string_view s) {
  if (s == "soft") return AssignMode::kSoft;
  if (s == "hard") return AssignMode::kHard;
  throw ConfigError(fmt::format("unknown assignment mode '{}' (soft|hard)", s));
}

InitMode init_mode_from_string(std::string_view s) {
  if (s == "random") return InitMode::kRandom;
  if (s == "warmstart") return InitMode::kWarmstart;
  throw ConfigError(fmt::format("unknown init mode '{}' (random|warmstart)", s));
}

LossMode loss_mode_from_string(std::string_view s) {
  if (s == "contrastive_only") return LossMode::kContrastiveOnly;
  if (s == "swamp_combined") return LossMode::kSwampCombined;
  throw ConfigError(
      fmt::format("unknown loss mode '{}' (contrastive_only|swamp_combined)", s));
}

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw ConfigError(fmt::format("config: {} must be > 0, got {}", name, v));
    }
  };
  positive(static_cast<double>(num_classes), "num_classes");
  positive(tau, "tau");
  positive(eta, "eta");
  positive(margin, "margin");
  positive(lr, "lr");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(static_cast<double>(epochs), "epochs");
  positive(static_cast<double>(embed_dim), "embed_dim");
  positive(static_cast<double>(hidden), "hidden");
  positive(static_cast<double>(sk_max_iters), "sk_max_iters");
  positive(sk_tol, "sk_tol");
  if (lambda < 0.0) {
    throw ConfigError(fmt::format("config: lambda must be >= 0, got {}", lambda));
  }
  if (queue_capacity < 0) {
    throw ConfigError("config: queue_capacity must be >= 0");
  }
  if (queue_capacity != 0 && queue_capacity < batch_size) {
    throw ConfigError(fmt::format(
        "config: queue_capacity must be 0 or >= batch_size ({} < {})", queue_capacity,
        batch_size));
  }
}

namespace {

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

EncoderNet make_encoder(int input_dim, int hidden, int embed_dim, RngStream& rng) {
  EncoderNet net;
  net.w1 = ParamTensor(glorot_uniform(input_dim, hidden, rng));
  net.b1 = ParamTensor(Matrix(1, hidden));
  net.w2 = ParamTensor(glorot_uniform(hidden, hidden, rng));
  net.b2 = ParamTensor(Matrix(1, hidden));
  net.w3 = ParamTensor(glorot_uniform(hidden, embed_dim, rng));
  net.b3 = ParamTensor(Matrix(1, embed_dim));
  return net;
}

// Tape forward matching EncoderNet::encode.
NodeRef encode_on_tape(Tape& tape, NodeRef x, EncoderNet& net) {
  NodeRef h1 = tape.activation(tape.affine(x, tape.param(net.w1), tape.param(net.b1)),
                               Activation::kRelu);
  NodeRef h2 = tape.activation(tape.affine(h1, tape.param(net.w2), tape.param(net.b2)),
                               Activation::kRelu);
  NodeRef out = tape.affine(h2, tape.param(net.w3), tape.param(net.b3));
  return tape.l2_normalize_rows(out);
}

Matrix gather_rows(const Matrix& src, std::span<const std::uint32_t> rows) {
  Matrix out(rows.size(), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* in = src.data() + static_cast<std::size_t>(rows[r]) * src.cols();
    std::copy(in, in + src.cols(), out.data() + r * src.cols());
  }
  return out;
}

double validation_r1(const Model& model, const TrainingView& view,
                     std::span<const std::uint32_t> val_rows) {
  const Matrix fa = model.encoder_a.encode(gather_rows(*view.x_a, val_rows));
  const Matrix fb = model.encoder_b.encode(gather_rows(*view.x_b, val_rows));
  return pair_r_at_1_percent(matmul_nt(fa, fb));
}

struct PhaseOutcome {
  Model best_model;
  int best_epoch = 0;  // global epoch index
  double best_val_r1 = -1.0;
};

// One training phase over `cfg.epochs` epochs; appends records to `history`
// starting at global epoch `epoch_offset + 1`.
PhaseOutcome run_phase(Model& model, const TrainingView& view, const TrainConfig& cfg,
                       LossMode loss_mode, int phase_tag, int epoch_offset,
                       RngStream& shuffle_rng, TrainHistory& history,
                       const TrainCallbacks& callbacks) {
  const std::vector<std::uint32_t> train_rows = [&] {
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < view.split.size(); ++i) {
      if (view.split[i] == static_cast<std::uint8_t>(SplitCode::kTrain))
        rows.push_back(static_cast<std::uint32_t>(i));
    }
    return rows;
  }();
  const std::vector<std::uint32_t> val_rows = [&] {
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < view.split.size(); ++i) {
      if (view.split[i] == static_cast<std::uint8_t>(SplitCode::kVal))
        rows.push_back(static_cast<std::uint32_t>(i));
    }
    return rows;
  }();
  if (train_rows.empty() || val_rows.empty()) {
    throw ConfigError("train: dataset must provide train and val splits");
  }

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t n_batches = train_rows.size() / batch;  // last partial dropped
  if (n_batches == 0) {
    throw ConfigError(fmt::format("train: batch size {} exceeds train split of {}",
                                  batch, train_rows.size()));
  }

  const bool swamp_on = loss_mode == LossMode::kSwampCombined;
  FeatureQueue queue(static_cast<std::size_t>(cfg.queue_capacity),
                     static_cast<std::size_t>(cfg.embed_dim));
  std::vector<double> warm_log_v_a, warm_log_v_b;
  bool warned_small_queue = false;

  std::vector<ParamTensor*> params = model.all_params();
  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};

  PhaseOutcome outcome;
  outcome.best_model = model;
  std::vector<std::uint32_t> order = train_rows;
  Tape tape;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double sum_lc = 0.0, sum_ls = 0.0;

    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::span<const std::uint32_t> rows(order.data() + b * batch, batch);
      tape.clear();
      NodeRef xa = tape.constant(gather_rows(*view.x_a, rows));
      NodeRef xb = tape.constant(gather_rows(*view.x_b, rows));
      NodeRef fa = encode_on_tape(tape, xa, model.encoder_a);
      NodeRef fb = encode_on_tape(tape, xb, model.encoder_b);

      NodeRef loss;
      NodeRef lc = contrastive_loss(tape, similarity_matrix(tape, fa, fb), cfg.margin);
      double ls_value = 0.0;
      if (swamp_on) {
        // Queue the detached embeddings, then solve both swapped OT problems
        // over the queue contents (or the bare batch when the queue is off).
        Matrix snap_a, snap_b;
        std::vector<std::uint32_t> mb_rows;
        if (cfg.queue_capacity > 0) {
          queue.push(tape.value(fa), tape.value(fb));
          history.queue_occupancy.push_back(static_cast<std::uint32_t>(queue.size()));
          auto snap = queue.snapshot();
          snap_a = std::move(snap.a);
          snap_b = std::move(snap.b);
          mb_rows = std::move(snap.minibatch_rows);
        } else {
          snap_a = tape.value(fa);
          snap_b = tape.value(fb);
          mb_rows.resize(batch);
          for (std::size_t i = 0; i < batch; ++i)
            mb_rows[i] = static_cast<std::uint32_t>(i);
        }
        if (!warned_small_queue &&
            snap_a.rows() < static_cast<std::size_t>(cfg.num_classes)) {
          warned_small_queue = true;
          if (callbacks.on_warning) {
            callbacks.on_warning(fmt::format(
                "OT population {} is smaller than num_classes {}; the uniform "
                "class marginal is underdetermined",
                snap_a.rows(), cfg.num_classes));
          }
        }

        const Matrix logp_a_q =
            class_posteriors_value(snap_a, model.prototypes.p.value, cfg.tau);
        const Matrix logp_b_q =
            class_posteriors_value(snap_b, model.prototypes.p.value, cfg.tau);
        // Swapped costs: q^A targets come from modality B's posteriors.
        auto solved_a = sinkhorn_solve_rows(
            swap_cost(logp_b_q), cfg.eta, cfg.sk_max_iters, cfg.sk_tol, mb_rows,
            warm_log_v_a.empty() ? nullptr : &warm_log_v_a);
        auto solved_b = sinkhorn_solve_rows(
            swap_cost(logp_a_q), cfg.eta, cfg.sk_max_iters, cfg.sk_tol, mb_rows,
            warm_log_v_b.empty() ? nullptr : &warm_log_v_b);
        warm_log_v_a = std::move(solved_a.state.log_v);
        warm_log_v_b = std::move(solved_b.state.log_v);

        Matrix q_a = solved_a.rows;
        Matrix q_b = solved_b.rows;
        if (cfg.assignment == AssignMode::kHard) {
          // Row-wise op, so hardening the minibatch slice equals slicing the
          // hardened full-queue plan.
          q_a = harden_rows(q_a);
          q_b = harden_rows(q_b);
        }
        q_a = renormalize_rows(q_a);
        q_b = renormalize_rows(q_b);

        NodeRef proto = tape.param(model.prototypes.p);
        NodeRef logp_a = class_posteriors(tape, fa, proto, cfg.tau);
        NodeRef logp_b = class_posteriors(tape, fb, proto, cfg.tau);
        NodeRef ls =
            swamp_loss(tape, logp_a, logp_b, std::move(q_a), std::move(q_b));
        ls_value = tape.value(ls)(0, 0);
        loss = total_loss(tape, lc, ls, cfg.lambda);
      } else {
        loss = lc;
      }

      const double lc_value = tape.value(lc)(0, 0);
      const double loss_value = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_value)) {
        throw NumericError(fmt::format(
            "train: non-finite loss at epoch {} batch {} (Lc={}, Ls={})",
            epoch_offset + epoch, b, lc_value, ls_value));
      }
      sum_lc += lc_value;
      sum_ls += ls_value;

      tape.backward(loss);
      adam_step(params, adam);
      for (ParamTensor* p : params) p->zero_grad();
      if (swamp_on) model.prototypes.project_unit_norm();
    }

    EpochRecord rec;
    rec.epoch = epoch_offset + epoch;
    rec.phase = phase_tag;
    rec.loss_contrastive = sum_lc / static_cast<double>(n_batches);
    rec.loss_swamp = sum_ls / static_cast<double>(n_batches);
    rec.val_r1_pair = validation_r1(model, view, val_rows);
    if (rec.val_r1_pair > outcome.best_val_r1) {
      outcome.best_val_r1 = rec.val_r1_pair;
      outcome.best_epoch = rec.epoch;
      outcome.best_model = model;
      rec.is_best = true;
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(rec);
    if (callbacks.on_epoch) callbacks.on_epoch(rec);
  }
  return outcome;
}

}  // namespace

Matrix EncoderNet::encode(const Matrix& x) const {
  auto relu = [](Matrix m) {
    for (std::size_t i = 0; i < m.size(); ++i)
      m.data()[i] = m.data()[i] > 0.0 ? m.data()[i] : 0.0;
    return m;
  };
  Matrix h1 = relu(add_row_broadcast(matmul(x, w1.value), b1.value));
  Matrix h2 = relu(add_row_broadcast(matmul(h1, w2.value), b2.value));
  return l2_normalize_rows_value(add_row_broadcast(matmul(h2, w3.value), b3.value));
}

std::vector<ParamTensor*> Model::all_params() {
  return {&encoder_a.w1, &encoder_a.b1, &encoder_a.w2, &encoder_a.b2,
          &encoder_a.w3, &encoder_a.b3, &encoder_b.w1, &encoder_b.b1,
          &encoder_b.w2, &encoder_b.b2, &encoder_b.w3, &encoder_b.b3,
          &prototypes.p};
}

Model make_model(const TrainConfig& cfg, int input_dim) {
  Model model;
  model.input_dim = input_dim;
  model.hidden = cfg.hidden;
  model.embed_dim = cfg.embed_dim;
  RngStream rng_a(cfg.seed, "model/encoder_a");
  RngStream rng_b(cfg.seed, "model/encoder_b");
  RngStream rng_p(cfg.seed, "model/prototypes");
  model.encoder_a = make_encoder(input_dim, cfg.hidden, cfg.embed_dim, rng_a);
  model.encoder_b = make_encoder(input_dim, cfg.hidden, cfg.embed_dim, rng_b);
  model.prototypes = PrototypeBank(static_cast<std::size_t>(cfg.num_classes),
                                   static_cast<std::size_t>(cfg.embed_dim), rng_p);
  return model;
}

TrainingView training_view(const PairedDataset& ds) {
  if (ds.split.size() != ds.size()) {
    throw ConfigError("training_view: dataset has no split assignment");
  }
  return TrainingView{&ds.x_a, &ds.x_b, std::span<const std::uint8_t>(ds.split)};
}

TrainResult train(const TrainingView& view, const TrainConfig& cfg,
                  const TrainCallbacks& callbacks) {
  cfg.validate();
  if (view.x_a == nullptr || view.x_b == nullptr) {
    throw ConfigError("train: null training view");
  }
  if (cfg.init == InitMode::kWarmstart) {
    return warmstart_train(view, cfg, callbacks);
  }
  Model model = make_model(cfg, static_cast<int>(view.x_a->cols()));
  RngStream shuffle_rng(cfg.seed, "train/shuffle");
  TrainHistory history;
  PhaseOutcome out = run_phase(model, view, cfg, cfg.loss_mode, 1, 0, shuffle_rng,
                               history, callbacks);
  history.best_epoch = out.best_epoch;
  history.best_val_r1 = out.best_val_r1;
  return TrainResult{std::move(out.best_model), std::move(history)};
}

TrainResult warmstart_train(const TrainingView& view, const TrainConfig& cfg,
                            const TrainCallbacks& callbacks) {
  cfg.validate();
  if (cfg.init != InitMode::kWarmstart) {
    throw ConfigError("warmstart_train: cfg.init must be 'warmstart'");
  }
  // Phase 1: plain contrastive training to its best validation model.
  Model model = make_model(cfg, static_cast<int>(view.x_a->cols()));
  RngStream shuffle_rng(cfg.seed, "train/shuffle");
  TrainHistory history;
  PhaseOutcome phase1 = run_phase(model, view, cfg, LossMode::kContrastiveOnly, 1, 0,
                                  shuffle_rng, history, callbacks);

  // Phase 2: combined objective from the pretrained encoders, with fresh
  // prototypes and fresh optimizer state.
  Model model2 = make_model(cfg, static_cast<int>(view.x_a->cols()));
  model2.encoder_a = phase1.best_model.encoder_a;
  model2.encoder_b = phase1.best_model.encoder_b;
  for (ParamTensor* p : model2.all_params()) {
    p->adam_m.fill(0.0);
    p->adam_v.fill(0.0);
    p->grad.fill(0.0);
    p->step_count = 0;
  }
  RngStream shuffle_rng2(cfg.seed, "train/shuffle/warm_phase2");
  PhaseOutcome phase2 = run_phase(model2, view, cfg, LossMode::kSwampCombined, 2,
                                  cfg.epochs, shuffle_rng2, history, callbacks);
  history.best_epoch = phase2.best_epoch;
  history.best_val_r1 = phase2.best_val_r1;
  return TrainResult{std::move(phase2.best_model), std::move(history)};
}

RetrievalReport evaluate_retrieval(const Model& model, const PairedDataset& ds,
                                   SplitCode split, Direction direction,
                                   RetrievalErrorType error_type) {
  const std::vector<std::uint32_t> rows = ds.rows_in_split(split);
  if (rows.empty()) {
    throw ConfigError("evaluate_retrieval: empty split");
  }
  const Matrix fa = model.encode_a(gather_rows(ds.x_a, rows));
  const Matrix fb = model.encode_b(gather_rows(ds.x_b, rows));
  const Matrix& queries = direction == Direction::kAToB ? fa : fb;
  const Matrix& gallery = direction == Direction::kAToB ? fb : fa;
  const auto ranks = rank_matrix(queries, gallery);

  RetrievalReport report;
  if (error_type == RetrievalErrorType::kPair) {
    std::vector<std::uint32_t> pair_index(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      pair_index[i] = static_cast<std::uint32_t>(i);
    report = score_pairs(ranks, pair_index);
  } else {
    std::vector<std::int32_t> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = ds.labels[rows[i]];
    report = score_classes(ranks, labels, labels);
  }
  report.direction = direction;
  return report;
}

}  // namespace swamp
