#include "swamp/losses.hpp"

#include <fmt/format.h>

#include <cmath>

namespace swamp {

PrototypeBank::PrototypeBank(std::size_t num_classes, std::size_t dim, RngStream& rng) {
  Matrix init(num_classes, dim);
  for (std::size_t i = 0; i < init.size(); ++i) init.data()[i] = rng.normal();
  p = ParamTensor(l2_normalize_rows_value(init));
}

void PrototypeBank::project_unit_norm() {
  p.value = l2_normalize_rows_value(p.value);
}

NodeRef similarity_matrix(Tape& tape, NodeRef fa, NodeRef fb) {
  return tape.matmul_nt(fa, fb);
}

NodeRef contrastive_loss(Tape& tape, NodeRef similarity, double margin) {
  return tape.contrastive_loss(similarity, margin);
}

NodeRef class_posteriors(Tape& tape, NodeRef features, NodeRef prototypes, double tau) {
  return tape.log_softmax_rows(tape.matmul_nt(features, prototypes), tau);
}

Matrix class_posteriors_value(const Matrix& features, const Matrix& prototypes,
                              double tau) {
  return log_softmax_rows_value(matmul_nt(features, prototypes), tau);
}

CostMatrix swap_cost(const Matrix& log_posteriors_other) {
  Matrix c(log_posteriors_other.rows(), log_posteriors_other.cols());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double v = -log_posteriors_other.data()[i];
    c.data()[i] = std::min(std::max(v, 0.0), kMaxSwapCost);
  }
  return CostMatrix(std::move(c));
}

NodeRef swamp_loss(Tape& tape, NodeRef log_post_a, NodeRef log_post_b,
                   Matrix targets_a, Matrix targets_b) {
  return tape.swamp_loss(log_post_a, log_post_b, std::move(targets_a),
                         std::move(targets_b));
}

NodeRef total_loss(Tape& tape, NodeRef contrastive, NodeRef swamp, double lambda) {
  if (lambda < 0.0) {
    throw ConfigError(fmt::format("total_loss: lambda must be >= 0, got {}", lambda));
  }
  return tape.add(contrastive, tape.scale(swamp, lambda));
}

}  // namespace swamp
