#pragma once

#include "swamp/matrix.hpp"
#include "swamp/rng.hpp"
#include "swamp/tape.hpp"

namespace swamp {

// Prototype attention representation: learnable query vectors attend over a
// variable-size set of local features and pool it into a fixed-length vector.
struct ParConfig {
  std::size_t n_prototypes = 20;
  double attention_temperature = 0.5;
  std::size_t n_heads = 1;
  std::size_t feature_dim = 0;

  std::size_t query_rows() const { return n_heads * n_prototypes; }
  std::size_t output_len() const { return n_heads * n_prototypes * feature_dim; }
  void validate() const;
};

// Shared between modalities. Multi-head = independent prototype banks stacked
// row-wise, head-major: row h * p + j is head h's prototype j.
struct ParPrototypes {
  ParamTensor queries;  // (H*p) x D

  ParPrototypes() = default;
  ParPrototypes(const ParConfig& cfg, RngStream& rng);
};

// Encodes one feature set (k x D, k >= 1) into a 1 x (H*p*D) vector:
// per query row q_j, weights = softmax_i(q_j . v_i / T), z_j = sum_i w_i v_i,
// output = concat of z rows (prototypes within a head, then heads).
NodeRef par_encode(Tape& tape, NodeRef features, NodeRef queries, const ParConfig& cfg);

}  // namespace swamp
