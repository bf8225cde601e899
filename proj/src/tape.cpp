// SPDX-License-Identifier: Apache-2.0
#include "sea/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sea/errors.hpp"

namespace sea::ad {

namespace {

Tape* common_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw DomainError("variables live on different tapes");
  return a.tape;
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + " shape mismatch: " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void add_into(Matrix& dst, const Matrix& src, double s = 1.0) {
  auto d = dst.values();
  auto v = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * v[i];
}

Tape::Node make_node(Op op, std::vector<int> inputs, Matrix value) {
  Tape::Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  return n;
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

Var Tape::parameter(Matrix value) {
  Node n = make_node(Op::Leaf, {}, std::move(value));
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(make_node(Op::Leaf, {}, std::move(value)));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Node node) {
  node.requires_grad = std::any_of(node.inputs.begin(), node.inputs.end(),
                                   [this](int i) { return nodes_[i].requires_grad; });
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Matrix& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss, bool release_intermediates) {
  if (loss.tape != this) throw DomainError("backward: loss recorded on another tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  for (auto& n : nodes_) n.grad = Matrix();
  grad_buffer(loss.id)[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.op == Op::Leaf) continue;
    if (n.requires_grad && !n.grad.empty()) backprop_node(id);
    if (release_intermediates) {
      n.grad = Matrix();
      n.value = Matrix();
      n.aux = Matrix();
    }
  }
}

void Tape::backprop_node(int id) {
  Node& n = nodes_[id];
  const Matrix& g = n.grad;
  auto wants = [this](int i) { return nodes_[i].requires_grad; };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::MatMul: {
      const int a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) kernel::gemm_nt(g, nodes_[b].value, grad_buffer(a));
      if (wants(b)) kernel::gemm_tn(nodes_[a].value, g, grad_buffer(b));
      break;
    }
    case Op::MatMulNT: {
      const int a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) kernel::gemm_nn(g, nodes_[b].value, grad_buffer(a));
      if (wants(b)) kernel::gemm_tn(g, nodes_[a].value, grad_buffer(b));
      break;
    }
    case Op::Add:
    case Op::Sum:
      for (int in : n.inputs)
        if (wants(in)) add_into(grad_buffer(in), g);
      break;
    case Op::AddRow: {
      const int a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) add_into(grad_buffer(a), g);
      if (wants(b)) {
        Matrix& gb = grad_buffer(b);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto gr = g.row(r);
          for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += gr[c];
        }
      }
      break;
    }
    case Op::Sub: {
      const int a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) add_into(grad_buffer(a), g);
      if (wants(b)) add_into(grad_buffer(b), g, -1.0);
      break;
    }
    case Op::Mul: {
      const int a = n.inputs[0], b = n.inputs[1];
      if (wants(a)) {
        Matrix& ga = grad_buffer(a);
        const Matrix& bv = nodes_[b].value;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (wants(b)) {
        Matrix& gb = grad_buffer(b);
        const Matrix& av = nodes_[a].value;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
      break;
    }
    case Op::Scale:
      add_into(grad_buffer(n.inputs[0]), g, n.scalar);
      break;
    case Op::Sigmoid: {
      Matrix& ga = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        ga[i] += g[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::Tanh: {
      Matrix& ga = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        ga[i] += g[i] * (1.0 - y * y);
      }
      break;
    }
    case Op::ConcatCols: {
      std::size_t offset = 0;
      for (int in : n.inputs) {
        const std::size_t w = nodes_[in].value.cols();
        if (wants(in)) {
          Matrix& gi = grad_buffer(in);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            auto src = g.row(r).subspan(offset, w);
            auto dst = gi.row(r);
            for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
          }
        }
        offset += w;
      }
      break;
    }
    case Op::SliceCol: {
      Matrix& ga = grad_buffer(n.inputs[0]);
      for (std::size_t r = 0; r < g.rows(); ++r) ga(r, n.index) += g[r];
      break;
    }
    case Op::MulCol: {
      const int a = n.inputs[0], c = n.inputs[1];
      const Matrix& av = nodes_[a].value;
      const Matrix& cv = nodes_[c].value;
      if (wants(a)) {
        Matrix& ga = grad_buffer(a);
        for (std::size_t r = 0; r < av.rows(); ++r)
          for (std::size_t k = 0; k < av.cols(); ++k) ga(r, k) += g(r, k) * cv[r];
      }
      if (wants(c)) {
        Matrix& gc = grad_buffer(c);
        for (std::size_t r = 0; r < av.rows(); ++r) {
          double s = 0.0;
          for (std::size_t k = 0; k < av.cols(); ++k) s += g(r, k) * av(r, k);
          gc[r] += s;
        }
      }
      break;
    }
    case Op::SumAll: {
      Matrix& ga = grad_buffer(n.inputs[0]);
      for (double& v : ga.values()) v += g[0];
      break;
    }
    case Op::GatherRows: {
      Matrix& gt = grad_buffer(n.inputs[0]);
      for (std::size_t r = 0; r < n.ids.size(); ++r) {
        auto dst = gt.row(static_cast<std::size_t>(n.ids[r]));
        auto src = g.row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::SoftmaxRows: {
      Matrix& ga = grad_buffer(n.inputs[0]);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto y = n.value.row(r);
        auto gr = g.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < y.size(); ++c) dot += gr[c] * y[c];
        auto dst = ga.row(r);
        for (std::size_t c = 0; c < y.size(); ++c) dst[c] += y[c] * (gr[c] - dot);
      }
      break;
    }
    case Op::SoftmaxCrossEntropy: {
      Matrix& gl = grad_buffer(n.inputs[0]);
      const Matrix& p = n.aux;
      double wsum = 0.0;
      for (double w : n.weights) wsum += w;
      for (std::size_t r = 0; r < p.rows(); ++r) {
        const double coef = g[0] * n.weights[r] / wsum;
        auto pr = p.row(r);
        auto dst = gl.row(r);
        for (std::size_t c = 0; c < pr.size(); ++c) dst[c] += coef * pr[c];
        dst[static_cast<std::size_t>(n.ids[r])] -= coef;
      }
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  Tape* t = common_tape(a, b);
  return t->record(make_node(Op::MatMul, {a.id, b.id}, sea::matmul(a.value(), b.value())));
}

Var matmul_nt(Var a, Var b) {
  Tape* t = common_tape(a, b);
  return t->record(make_node(Op::MatMulNT, {a.id, b.id}, sea::matmul_nt(a.value(), b.value())));
}

Var add(Var a, Var b) {
  Tape* t = common_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Matrix out = a.value();
  add_into(out, b.value());
  return t->record(make_node(Op::Add, {a.id, b.id}, std::move(out)));
}

Var add_row(Var a, Var b) {
  Tape* t = common_tape(a, b);
  const Matrix& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != a.value().cols()) {
    throw ShapeError("add_row shape mismatch: " + a.value().shape_string() + " + row " +
                     bv.shape_string());
  }
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  return t->record(make_node(Op::AddRow, {a.id, b.id}, std::move(out)));
}

Var sub(Var a, Var b) {
  Tape* t = common_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Matrix out = a.value();
  add_into(out, b.value(), -1.0);
  return t->record(make_node(Op::Sub, {a.id, b.id}, std::move(out)));
}

Var mul(Var a, Var b) {
  Tape* t = common_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Matrix out = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t->record(make_node(Op::Mul, {a.id, b.id}, std::move(out)));
}

Var scale(Var a, double s) {
  Matrix out = a.value();
  for (double& v : out.values()) v *= s;
  auto n = make_node(Op::Scale, {a.id}, std::move(out));
  n.scalar = s;
  return a.tape->record(std::move(n));
}

Var sigmoid(Var a) { return a.tape->record(make_node(Op::Sigmoid, {a.id}, sea::sigmoid(a.value()))); }

Var tanh(Var a) { return a.tape->record(make_node(Op::Tanh, {a.id}, sea::tanh(a.value()))); }

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape* t = parts.front().tape;
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  std::vector<int> ids;
  for (const Var& p : parts) {
    common_tape(parts.front(), p);
    if (p.value().rows() != rows) {
      throw ShapeError("concat_cols row mismatch: " + parts.front().value().shape_string() +
                       " vs " + p.value().shape_string());
    }
    cols += p.value().cols();
    ids.push_back(p.id);
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r);
    std::size_t offset = 0;
    for (const Var& p : parts) {
      auto src = p.value().row(r);
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += src.size();
    }
  }
  return t->record(make_node(Op::ConcatCols, std::move(ids), std::move(out)));
}

Var concat_cols(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_cols(parts);
}

Var slice_col(Var a, std::size_t col) {
  const Matrix& av = a.value();
  if (col >= av.cols()) {
    throw IndexError("slice_col: column " + std::to_string(col) + " of " + av.shape_string());
  }
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) out[r] = av(r, col);
  auto n = make_node(Op::SliceCol, {a.id}, std::move(out));
  n.index = col;
  return a.tape->record(std::move(n));
}

Var mul_col(Var a, Var c) {
  Tape* t = common_tape(a, c);
  const Matrix& av = a.value();
  const Matrix& cv = c.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) {
    throw ShapeError("mul_col shape mismatch: " + av.shape_string() + " by column " +
                     cv.shape_string());
  }
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v *= cv[r];
  return t->record(make_node(Op::MulCol, {a.id, c.id}, std::move(out)));
}

Var sum(std::span<const Var> terms) {
  if (terms.empty()) throw ShapeError("sum: no inputs");
  Matrix out = terms.front().value();
  std::vector<int> ids{terms.front().id};
  for (std::size_t i = 1; i < terms.size(); ++i) {
    common_tape(terms.front(), terms[i]);
    require_same_shape("sum", out, terms[i].value());
    add_into(out, terms[i].value());
    ids.push_back(terms[i].id);
  }
  return terms.front().tape->record(make_node(Op::Sum, std::move(ids), std::move(out)));
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->record(make_node(Op::SumAll, {a.id}, Matrix(1, 1, s)));
}

Var gather_rows(Var table, std::vector<int> ids) {
  const Matrix& tv = table.value();
  Matrix out(ids.size(), tv.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= tv.rows()) {
      throw IndexError("gather_rows: id " + std::to_string(ids[r]) + " outside table of " +
                       std::to_string(tv.rows()) + " rows");
    }
    auto src = tv.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  auto n = make_node(Op::GatherRows, {table.id}, std::move(out));
  n.ids = std::move(ids);
  return table.tape->record(std::move(n));
}

Var softmax_rows(Var a) {
  return a.tape->record(make_node(Op::SoftmaxRows, {a.id}, sea::softmax_rows(a.value())));
}

Var softmax_cross_entropy(Var logits, std::vector<int> labels, std::vector<double> weights) {
  const Matrix& lv = logits.value();
  if (labels.size() != lv.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + lv.shape_string());
  }
  if (weights.empty()) weights.assign(labels.size(), 1.0);
  if (weights.size() != labels.size()) throw ShapeError("softmax_cross_entropy: weight count");
  Matrix probs = sea::softmax_rows(lv);
  double total = 0.0, wsum = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= lv.cols()) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(labels[r]) +
                       " out of range");
    }
    const double p =
        std::clamp(probs(r, static_cast<std::size_t>(labels[r])), kProbClip, 1.0 - kProbClip);
    total -= weights[r] * std::log(p);
    wsum += weights[r];
  }
  if (!(wsum > 0.0)) throw DomainError("softmax_cross_entropy: weights sum to zero");
  auto n = make_node(Op::SoftmaxCrossEntropy, {logits.id}, Matrix(1, 1, total / wsum));
  n.ids = std::move(labels);
  n.weights = std::move(weights);
  n.aux = std::move(probs);
  return logits.tape->record(std::move(n));
}

}  // namespace sea::ad
