#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dialsel/tensor.hpp"

namespace dialsel {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators, one pair per parameter, shaped alike.
struct AdamState {
  AdamConfig cfg;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<Tensor* const> params);
};

// Bias-corrected Adam update; increments state.step.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state);

}  // namespace dialsel
