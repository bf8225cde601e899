// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sea/matrix.hpp"
#include "sea/tape.hpp"

namespace sea {

// Records a scalar loss on the tape from leaves bound to the given parameters.
using LossBuilder = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::vector<Matrix> tape_gradients;
  std::vector<Matrix> numeric_gradients;
};

// Central finite differences against the tape gradient for every coordinate.
// Relative error per coordinate is |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
// epsilon must lie in [1e-7, 1e-3].
GradientCheckResult gradient_check_detailed(const LossBuilder& loss_fn,
                                            std::span<const Matrix> params, double epsilon);

double gradient_check(const LossBuilder& loss_fn, std::span<const Matrix> params,
                      double epsilon = 1e-5);

}  // namespace sea
