// SPDX-License-Identifier: Apache-2.0
#include "sea/optim.hpp"

#include <cmath>
#include <string>

#include "sea/errors.hpp"

namespace sea {

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty() && state.v.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                     " tensors, parameters " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(state.m[i]) ||
        !params[i]->same_shape(state.v[i])) {
      throw ShapeError("adam_step: tensor " + std::to_string(i) + " parameter " +
                       params[i]->shape_string() + " gradient " + grads[i].shape_string() +
                       " moments " + state.m[i].shape_string());
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    auto g = grads[i].values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

double clip_global_norm(std::span<Matrix> grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix& g : grads)
    for (double x : g.values()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Matrix& g : grads)
      for (double& x : g.values()) x *= s;
  }
  return norm;
}

}  // namespace sea
