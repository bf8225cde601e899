// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sea/matrix.hpp"

namespace sea {

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update. Moment buffers are created on the first
// call; afterwards their shapes must keep matching params.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state);

// Rescales grads in place so their joint L2 norm is at most max_norm.
// Returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(std::span<Matrix> grads, double max_norm);

}  // namespace sea
