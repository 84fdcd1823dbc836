#pragma once

#include <span>

#include "swamp/tape.hpp"

namespace swamp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Grads are left untouched; the caller
// zeroes them between steps.
void adam_step(std::span<ParamTensor* const> params, const AdamConfig& cfg);

}  // namespace swamp
