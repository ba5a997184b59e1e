// Copyright 2026 The MSG Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MSG_TENSOR_H_
#define MSG_TENSOR_H_

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace msg {

/// Dense row-major matrix. Rows are time steps (frames or phonemes), columns
/// are channels, everywhere in this code base.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

namespace ad {

struct Node {
  Matrix value;
  Matrix grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node &)> backward;

  void AccumulateGrad(const Matrix &g);
};

/// Handle to a node of the reverse-mode tape. Copies share the node.
///
/// A graph is built implicitly by calling the free functions below; Backward()
/// on a 1x1 result walks it in reverse topological order. Leaf variables that
/// require gradients (parameters) keep their accumulated gradient until
/// ZeroGrad() is called.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);

  static Var Scalar(double v);

  const Matrix &value() const { return node_->value; }
  Matrix &mutable_value() { return node_->value; }
  const Matrix &grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;
  bool defined() const { return node_ != nullptr; }

  void ZeroGrad();
  /// Seeds d(this)/d(this) = 1 and propagates. Requires a 1x1 value.
  void Backward() const;
  /// A new leaf holding the same value with no history.
  Var Detach() const;

  const std::shared_ptr<Node> &node() const { return node_; }

 private:
  friend Var MakeResult(Matrix value, std::vector<Var> parents,
                        std::function<void(Node &)> backward);
  std::shared_ptr<Node> node_;
};

// Internal constructor used by the op implementations.
Var MakeResult(Matrix value, std::vector<Var> parents,
               std::function<void(Node &)> backward);

// Elementwise and broadcasting arithmetic.
Var Add(const Var &a, const Var &b);
Var Sub(const Var &a, const Var &b);
Var Mul(const Var &a, const Var &b);
Var Scale(const Var &a, double s);
Var AddScalar(const Var &a, double s);
/// a (R x C) + row (1 x C), broadcast over rows.
Var AddRow(const Var &a, const Var &row);
/// a (R x C) * row (1 x C), broadcast over rows.
Var MulRow(const Var &a, const Var &row);

Var MatMul(const Var &a, const Var &b);
/// a * b^T
Var MatMulNT(const Var &a, const Var &b);
/// x * w + b, with b a 1 x out row.
Var Linear(const Var &x, const Var &w, const Var &b);

Var Relu(const Var &a);
Var LeakyRelu(const Var &a, double slope);
Var Tanh(const Var &a);
Var Sigmoid(const Var &a);
Var Square(const Var &a);
Var Abs(const Var &a);

/// Row-wise softmax. Columns >= valid_cols receive zero probability.
Var SoftmaxRows(const Var &a, Eigen::Index valid_cols = -1);
/// Row-wise layer normalization with affine gamma/beta (1 x C each).
Var LayerNormRows(const Var &x, const Var &gamma, const Var &beta, double eps = 1e-5);

/// 1-D convolution over rows. weight is (kernel * in) x out, laid out as
/// kernel-major blocks of input channels; bias is 1 x out. Zero padding.
Var Conv1d(const Var &x, const Var &weight, const Var &bias, int kernel, int stride,
           int pad_left, int pad_right);

/// out.row(i) = table.row(indices[i]). Covers embedding lookup, the length
/// regulator and broadcasting a single row.
Var GatherRows(const Var &table, std::span<const int> indices);
/// Non-overlapping mean over groups of `factor` rows; trailing rows dropped.
Var AvgPoolRows(const Var &x, int factor);
Var SliceRows(const Var &x, Eigen::Index start, Eigen::Index count);
Var SliceCols(const Var &x, Eigen::Index start, Eigen::Index count);
Var ConcatCols(const std::vector<Var> &parts);
Var ConcatRows(const std::vector<Var> &parts);
/// Zeroes rows >= valid_rows.
Var MaskRows(const Var &x, Eigen::Index valid_rows);
/// Multiplies by a fixed 0/1-valued (or any constant) matrix.
Var MulConst(const Var &a, const Matrix &m);

Var Sum(const Var &a);
Var Mean(const Var &a);

}  // namespace ad
}  // namespace msg

#endif  // MSG_TENSOR_H_
