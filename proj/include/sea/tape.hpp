// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sea/matrix.hpp"

// Reverse-mode differentiation over a small fixed set of matrix primitives.
namespace sea::ad {

class Tape;

// Handle to a node recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

enum class Op {
  Leaf,
  MatMul,
  MatMulNT,
  Add,
  AddRow,
  Sub,
  Mul,
  Scale,
  Sigmoid,
  Tanh,
  ConcatCols,
  SliceCol,
  MulCol,
  Sum,
  SumAll,
  GatherRows,
  SoftmaxRows,
  SoftmaxCrossEntropy,
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that receives a gradient.
  Var parameter(Matrix value);
  // Leaf that is never differentiated.
  Var constant(Matrix value);

  // Seeds d(loss)/d(loss) = 1 and replays nodes in reverse order. With
  // release_intermediates, non-leaf values and gradients are dropped as soon
  // as they have been consumed; only leaf gradients stay readable.
  void backward(Var loss, bool release_intermediates = false);

  const Matrix& value(int id) const { return nodes_[id].value; }
  // Zero-sized when the node never received a gradient.
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  struct Node {
    Op op = Op::Leaf;
    std::vector<int> inputs;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    double scalar = 0.0;
    std::size_t index = 0;
    std::vector<int> ids;
    std::vector<double> weights;
    Matrix aux;
  };

  Var record(Node node);
  const Node& node(int id) const { return nodes_[id]; }

 private:
  Matrix& grad_buffer(int id);
  void backprop_node(int id);

  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
// a + broadcast of the 1xN row vector b to every row.
Var add_row(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var sigmoid(Var a);
Var tanh(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(Var a, Var b);
Var slice_col(Var a, std::size_t col);
// Row i of a scaled by c(i, 0).
Var mul_col(Var a, Var c);
Var sum(std::span<const Var> terms);
Var sum_all(Var a);
Var gather_rows(Var table, std::vector<int> ids);
Var softmax_rows(Var a);
// Weighted mean over rows of -ln(softmax(logits)[label]), probabilities
// clipped to [1e-15, 1 - 1e-15]. Backward uses the fused p - y form.
// Empty weights mean uniform.
Var softmax_cross_entropy(Var logits, std::vector<int> labels, std::vector<double> weights = {});

}  // namespace sea::ad
