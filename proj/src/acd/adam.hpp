#pragma once

#include "acd/nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace acd {

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update over `params`, reading each parameter's
/// grad buffer. Moment buffers are created on the first call.
void adam_step(std::span<NamedTensor> params, AdamState& state);

}  // namespace acd
