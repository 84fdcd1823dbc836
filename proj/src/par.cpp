#include "swamp/par.hpp"

#include <fmt/format.h>

namespace swamp {

void ParConfig::validate() const {
  if (n_prototypes < 1) throw ConfigError("par: n_prototypes must be >= 1");
  if (n_heads < 1) throw ConfigError("par: n_heads must be >= 1");
  if (!(attention_temperature > 0.0)) {
    throw ConfigError(fmt::format("par: attention temperature must be > 0, got {}",
                                  attention_temperature));
  }
  if (feature_dim < 1) throw ConfigError("par: feature_dim must be >= 1");
}

ParPrototypes::ParPrototypes(const ParConfig& cfg, RngStream& rng) {
  cfg.validate();
  Matrix init(cfg.query_rows(), cfg.feature_dim);
  for (std::size_t i = 0; i < init.size(); ++i) init.data()[i] = rng.normal();
  queries = ParamTensor(std::move(init));
}

NodeRef par_encode(Tape& tape, NodeRef features, NodeRef queries, const ParConfig& cfg) {
  cfg.validate();
  const Matrix& v = tape.value(features);
  const Matrix& q = tape.value(queries);
  if (v.rows() < 1) {
    throw ShapeError("par_encode: feature set must contain at least one element");
  }
  if (v.cols() != cfg.feature_dim) {
    throw ShapeError(fmt::format("par_encode: feature dim {} != configured {}",
                                 v.cols(), cfg.feature_dim));
  }
  if (q.rows() != cfg.query_rows() || q.cols() != cfg.feature_dim) {
    throw ShapeError(fmt::format("par_encode: queries {} but config wants {}x{}",
                                 q.shape_str(), cfg.query_rows(), cfg.feature_dim));
  }
  NodeRef logits = tape.matmul_nt(queries, features);  // (H*p) x k
  NodeRef weights = tape.softmax_rows(logits, cfg.attention_temperature);
  NodeRef pooled = tape.matmul(weights, features);  // (H*p) x D
  return tape.reshape(pooled, 1, cfg.output_len());
}

}  // namespace swamp
