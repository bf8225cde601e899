// SPDX-License-Identifier: Apache-2.0
#include "sea/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "sea/errors.hpp"

namespace sea {

namespace {

double evaluate(const LossBuilder& loss_fn, std::span<const Matrix> params) {
  ad::Tape tape;
  std::vector<ad::Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix& p : params) leaves.push_back(tape.constant(p));
  const ad::Var loss = loss_fn(tape, leaves);
  const double v = loss.value()[0];
  if (!std::isfinite(v)) throw NumericError("gradient_check: loss is not finite");
  return v;
}

}  // namespace

GradientCheckResult gradient_check_detailed(const LossBuilder& loss_fn,
                                            std::span<const Matrix> params, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw DomainError("gradient_check: epsilon must lie in [1e-7, 1e-3]");
  }
  GradientCheckResult result;

  {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const Matrix& p : params) leaves.push_back(tape.parameter(p));
    const ad::Var loss = loss_fn(tape, leaves);
    if (loss.value().size() != 1 || !std::isfinite(loss.value()[0])) {
      throw NumericError("gradient_check: loss is not a finite scalar");
    }
    tape.backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix& g = leaves[i].grad();
      result.tape_gradients.push_back(g.empty() ? Matrix(params[i].rows(), params[i].cols()) : g);
    }
  }

  std::vector<Matrix> work(params.begin(), params.end());
  for (std::size_t i = 0; i < work.size(); ++i) {
    Matrix numeric(work[i].rows(), work[i].cols());
    for (std::size_t k = 0; k < work[i].size(); ++k) {
      const double saved = work[i][k];
      work[i][k] = saved + epsilon;
      const double plus = evaluate(loss_fn, work);
      work[i][k] = saved - epsilon;
      const double minus = evaluate(loss_fn, work);
      work[i][k] = saved;
      numeric[k] = (plus - minus) / (2.0 * epsilon);

      const double ad_g = result.tape_gradients[i][k];
      const double denom = std::max(1e-8, std::abs(ad_g) + std::abs(numeric[k]));
      result.max_relative_error =
          std::max(result.max_relative_error, std::abs(ad_g - numeric[k]) / denom);
    }
    result.numeric_gradients.push_back(std::move(numeric));
  }
  return result;
}

double gradient_check(const LossBuilder& loss_fn, std::span<const Matrix> params, double epsilon) {
  return gradient_check_detailed(loss_fn, params, epsilon).max_relative_error;
}

}  // namespace sea
