#pragma once

#include "swamp/matrix.hpp"
#include "swamp/rng.hpp"
#include "swamp/sinkhorn.hpp"
#include "swamp/tape.hpp"

namespace swamp {

// K trainable class prototypes shared between modalities. Rows are projected
// back to unit L2 norm after every optimizer step so dot-product logits stay
// on the cosine scale the small softmax temperature expects.
struct PrototypeBank {
  ParamTensor p;  // K x d

  PrototypeBank() = default;
  PrototypeBank(std::size_t num_classes, std::size_t dim, RngStream& rng);

  std::size_t num_classes() const { return p.value.rows(); }
  std::size_t dim() const { return p.value.cols(); }

  void project_unit_norm();
};

// S[i][j] = cosine of (Fa row i, Fb row j); both inputs must be
// row-normalized already.
NodeRef similarity_matrix(Tape& tape, NodeRef fa, NodeRef fb);

// Bidirectional hinge with in-batch hard negatives, averaged over the batch.
NodeRef contrastive_loss(Tape& tape, NodeRef similarity, double margin);

// Log class posteriors log p(y | x) for row-normalized features F against the
// prototype bank, softmax temperature tau. Differentiable (tape) and
// gradient-free (value) variants share the same kernel.
NodeRef class_posteriors(Tape& tape, NodeRef features, NodeRef prototypes, double tau);
Matrix class_posteriors_value(const Matrix& features, const Matrix& prototypes,
                              double tau);

// OT cost from the other modality's posteriors: C = -log p, clipped to
// [0, kMaxSwapCost].
inline constexpr double kMaxSwapCost = 69.0;  // -log(1e-30), rounded
CostMatrix swap_cost(const Matrix& log_posteriors_other);

// Swapped-assignment cross-entropy (targets fixed, no gradient into them).
NodeRef swamp_loss(Tape& tape, NodeRef log_post_a, NodeRef log_post_b,
                   Matrix targets_a, Matrix targets_b);

// Lc + lambda * Ls.
NodeRef total_loss(Tape& tape, NodeRef contrastive, NodeRef swamp, double lambda);

}  // namespace swamp
