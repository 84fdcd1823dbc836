#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "swamp/matrix.hpp"

namespace swamp {

// Trainable parameter with accumulated gradient and Adam state.
struct ParamTensor {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  long step_count = 0;

  ParamTensor() = default;
  explicit ParamTensor(Matrix init)
      : value(std::move(init)),
        grad(value.rows(), value.cols()),
        adam_m(value.rows(), value.cols()),
        adam_v(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

enum class Activation { kRelu, kTanh, kSigmoid };

// Handle to a value recorded on a Tape.
struct NodeRef {
  std::uint32_t index = UINT32_MAX;
  bool valid() const { return index != UINT32_MAX; }
};

// Reverse-mode autodiff tape over Matrix values. Operations record a backward
// closure at creation; backward() replays them in exact reverse order and
// routes leaf gradients into their ParamTensors. Rebuilt (clear()) every
// training step.
class Tape {
 public:
  NodeRef constant(Matrix value);
  NodeRef param(ParamTensor& p);

  // x(N x din) * w(din x dout) + b(1 x dout) broadcast over rows.
  NodeRef affine(NodeRef x, NodeRef w, NodeRef b);
  NodeRef activation(NodeRef x, Activation kind);
  NodeRef l2_normalize_rows(NodeRef x);
  NodeRef log_softmax_rows(NodeRef logits, double temperature);
  NodeRef softmax_rows(NodeRef logits, double temperature);
  NodeRef matmul(NodeRef a, NodeRef b);
  NodeRef matmul_nt(NodeRef a, NodeRef b);  // a * b^T
  NodeRef add(NodeRef a, NodeRef b);
  NodeRef scale(NodeRef x, double c);
  NodeRef sum(NodeRef x);   // 1x1
  NodeRef mean(NodeRef x);  // 1x1
  NodeRef square(NodeRef x);
  NodeRef reshape(NodeRef x, std::size_t rows, std::size_t cols);

  // Bidirectional max-margin hinge over an N x N similarity matrix with
  // in-batch hard negatives, averaged over N. N == 1 yields 0 (no negatives).
  NodeRef contrastive_loss(NodeRef similarity, double margin);

  // Swapped-assignment cross-entropy: mean_i sum_y qa[i][y] * (-logp_a[i][y])
  // plus the same for modality B. Targets are constants (no gradient).
  NodeRef swamp_loss(NodeRef log_post_a, NodeRef log_post_b, Matrix targets_a,
                     Matrix targets_b);

  const Matrix& value(NodeRef n) const;
  const Matrix& grad(NodeRef n) const;

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, accumulating
  // into every recorded ParamTensor's grad. Loss must be 1x1.
  void backward(NodeRef loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  // Backward closures receive the tape and their own node index; they read
  // their upstream grad there and scatter into input node grads.
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  struct Node {
    Matrix value;
    Matrix grad;
    ParamTensor* leaf = nullptr;
    BackwardFn backward_fn;  // empty for leaves
  };

  NodeRef push(Matrix value, BackwardFn backward_fn = {}, ParamTensor* leaf = nullptr);
  Node& node(NodeRef n);
  const Node& node(NodeRef n) const;
  Matrix& grad_at(std::uint32_t idx) { return nodes_[idx].grad; }
  const Matrix& value_at(std::uint32_t idx) const { return nodes_[idx].value; }

  std::vector<Node> nodes_;
};

}  // namespace swamp
