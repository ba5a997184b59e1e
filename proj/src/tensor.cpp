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

#include "msg/tensor.h"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace msg {
namespace ad {

namespace {

void CheckSameShape(const Var &a, const Var &b, const char *op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace

void Node::AccumulateGrad(const Matrix &g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::Scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Var(std::move(m));
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) throw std::logic_error("item() on a non-scalar");
  return node_->value(0, 0);
}

void Var::ZeroGrad() { node_->grad.resize(0, 0); }

Var Var::Detach() const { return Var(node_->value, false); }

void Var::Backward() const {
  if (rows() != 1 || cols() != 1) throw std::logic_error("Backward() on a non-scalar");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the live subgraph.
  std::vector<Node *> order;
  std::unordered_set<Node *> visited;
  std::vector<std::pair<Node *, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto &[n, next] = stack.back();
    if (next < n->parents.size()) {
      Node *p = n->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->AccumulateGrad(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
  // Interior gradients are not needed after the pass.
  for (Node *n : order) {
    if (n->backward) n->grad.resize(0, 0);
  }
}

Var MakeResult(Matrix value, std::vector<Var> parents, std::function<void(Node &)> backward) {
  Var out;
  out.node_ = std::make_shared<Node>();
  out.node_->value = std::move(value);
  bool any = false;
  for (const auto &p : parents) any = any || p.requires_grad();
  if (any) {
    out.node_->requires_grad = true;
    out.node_->parents.reserve(parents.size());
    for (auto &p : parents) out.node_->parents.push_back(p.node());
    out.node_->backward = std::move(backward);
  }
  return out;
}

// Each backward closure reads parents through the node to avoid capturing
// shared_ptrs twice.
#define MSG_PARENT(i) (*self.parents[i])

Var Add(const Var &a, const Var &b) {
  CheckSameShape(a, b, "Add");
  return MakeResult(a.value() + b.value(), {a, b}, [](Node &self) {
    if (MSG_PARENT(0).requires_grad) MSG_PARENT(0).AccumulateGrad(self.grad);
    if (MSG_PARENT(1).requires_grad) MSG_PARENT(1).AccumulateGrad(self.grad);
  });
}

Var Sub(const Var &a, const Var &b) {
  CheckSameShape(a, b, "Sub");
  return MakeResult(a.value() - b.value(), {a, b}, [](Node &self) {
    if (MSG_PARENT(0).requires_grad) MSG_PARENT(0).AccumulateGrad(self.grad);
    if (MSG_PARENT(1).requires_grad) MSG_PARENT(1).AccumulateGrad(-self.grad);
  });
}

Var Mul(const Var &a, const Var &b) {
  CheckSameShape(a, b, "Mul");
  return MakeResult(a.value().cwiseProduct(b.value()), {a, b}, [](Node &self) {
    if (MSG_PARENT(0).requires_grad)
      MSG_PARENT(0).AccumulateGrad(self.grad.cwiseProduct(MSG_PARENT(1).value));
    if (MSG_PARENT(1).requires_grad)
      MSG_PARENT(1).AccumulateGrad(self.grad.cwiseProduct(MSG_PARENT(0).value));
  });
}

Var Scale(const Var &a, double s) {
  return MakeResult(a.value() * s, {a}, [s](Node &self) {
    MSG_PARENT(0).AccumulateGrad(self.grad * s);
  });
}

Var AddScalar(const Var &a, double s) {
  Matrix v = a.value().array() + s;
  return MakeResult(std::move(v), {a}, [](Node &self) {
    MSG_PARENT(0).AccumulateGrad(self.grad);
  });
}

Var AddRow(const Var &a, const Var &row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw std::invalid_argument("AddRow: row must be 1 x " + std::to_string(a.cols()));
  Matrix v = a.value().rowwise() + row.value().row(0);
  return MakeResult(std::move(v), {a, row}, [](Node &self) {
    if (MSG_PARENT(0).requires_grad) MSG_PARENT(0).AccumulateGrad(self.grad);
    if (MSG_PARENT(1).requires_grad) MSG_PARENT(1).AccumulateGrad(self.grad.colwise().sum());
  });
}

Var MulRow(const Var &a, const Var &row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw std::invalid_argument("MulRow: row must be 1 x " + std::to_string(a.cols()));
  Matrix v = a.value().array().rowwise() * row.value().row(0).array();
  return MakeResult(std::move(v), {a, row}, [](Node &self) {
    const Matrix &av = MSG_PARENT(0).value;
    const Matrix &rv = MSG_PARENT(1).value;
    if (MSG_PARENT(0).requires_grad) {
      Matrix g = self.grad.array().rowwise() * rv.row(0).array();
      MSG_PARENT(0).AccumulateGrad(g);
    }
    if (MSG_PARENT(1).requires_grad)
      MSG_PARENT(1).AccumulateGrad(self.grad.cwiseProduct(av).colwise().sum());
  });
}

Var MatMul(const Var &a, const Var &b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("MatMul: inner dimension mismatch");
  return MakeResult(a.value() * b.value(), {a, b}, [](Node &self) {
    if (MSG_PARENT(0).requires_grad)
      MSG_PARENT(0).AccumulateGrad(self.grad * MSG_PARENT(1).value.transpose());
    if (MSG_PARENT(1).requires_grad)
      MSG_PARENT(1).AccumulateGrad(MSG_PARENT(0).value.transpose() * self.grad);
  });
}

Var MatMulNT(const Var &a, const Var &b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("MatMulNT: inner dimension mismatch");
  return MakeResult(a.value() * b.value().transpose(), {a, b}, [](Node &self) {
    if (MSG_PARENT(0).requires_grad)
      MSG_PARENT(0).AccumulateGrad(self.grad * MSG_PARENT(1).value);
    if (MSG_PARENT(1).requires_grad)
      MSG_PARENT(1).AccumulateGrad(self.grad.transpose() * MSG_PARENT(0).value);
  });
}

Var Linear(const Var &x, const Var &w, const Var &b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols())
    throw std::invalid_argument("Linear: shape mismatch");
  Matrix v = x.value() * w.value();
  v.rowwise() += b.value().row(0);
  return MakeResult(std::move(v), {x, w, b}, [](Node &self) {
    if (MSG_PARENT(0).requires_grad)
      MSG_PARENT(0).AccumulateGrad(self.grad * MSG_PARENT(1).value.transpose());
    if (MSG_PARENT(1).requires_grad)
      MSG_PARENT(1).AccumulateGrad(MSG_PARENT(0).value.transpose() * self.grad);
    if (MSG_PARENT(2).requires_grad) MSG_PARENT(2).AccumulateGrad(self.grad.colwise().sum());
  });
}

Var Relu(const Var &a) {
  Matrix v = a.value().cwiseMax(0.0);
  return MakeResult(std::move(v), {a}, [](Node &self) {
    Matrix g = (MSG_PARENT(0).value.array() > 0.0).select(self.grad, 0.0);
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var LeakyRelu(const Var &a, double slope) {
  Matrix v = (a.value().array() > 0.0).select(a.value(), a.value() * slope);
  return MakeResult(std::move(v), {a}, [slope](Node &self) {
    Matrix g = (MSG_PARENT(0).value.array() > 0.0).select(self.grad, self.grad * slope);
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var Tanh(const Var &a) {
  Matrix v = a.value().array().tanh();
  return MakeResult(v, {a}, [](Node &self) {
    Matrix g = self.grad.array() * (1.0 - self.value.array().square());
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var Sigmoid(const Var &a) {
  Matrix v = (1.0 + (-a.value().array()).exp()).inverse();
  return MakeResult(v, {a}, [](Node &self) {
    Matrix g = self.grad.array() * self.value.array() * (1.0 - self.value.array());
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var Square(const Var &a) {
  return MakeResult(a.value().array().square().matrix(), {a}, [](Node &self) {
    MSG_PARENT(0).AccumulateGrad(2.0 * self.grad.cwiseProduct(MSG_PARENT(0).value));
  });
}

Var Abs(const Var &a) {
  return MakeResult(a.value().cwiseAbs(), {a}, [](Node &self) {
    Matrix g = self.grad.array() * MSG_PARENT(0).value.array().sign();
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var SoftmaxRows(const Var &a, Eigen::Index valid_cols) {
  const Eigen::Index n = a.cols();
  const Eigen::Index valid = (valid_cols < 0 || valid_cols > n) ? n : valid_cols;
  if (valid == 0) throw std::invalid_argument("SoftmaxRows: no valid columns");
  Matrix v = Matrix::Zero(a.rows(), n);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    auto row = a.value().row(r).head(valid);
    const double m = row.maxCoeff();
    auto e = (row.array() - m).exp();
    v.row(r).head(valid) = e / e.sum();
  }
  return MakeResult(v, {a}, [](Node &self) {
    const Matrix &y = self.value;
    Eigen::VectorXd dot = self.grad.cwiseProduct(y).rowwise().sum();
    Matrix g = y.array() * (self.grad.colwise() - dot).array();
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var LayerNormRows(const Var &x, const Var &gamma, const Var &beta, double eps) {
  const Eigen::Index c = x.cols();
  if (gamma.cols() != c || beta.cols() != c || gamma.rows() != 1 || beta.rows() != 1)
    throw std::invalid_argument("LayerNormRows: affine shape mismatch");
  const Matrix &xv = x.value();
  Eigen::VectorXd mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / double(c)) + eps).rsqrt().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return MakeResult(std::move(out), {x, gamma, beta},
                    [xhat = std::move(xhat), inv_std = std::move(inv_std), c](Node &self) {
                      const Matrix &g = self.grad;
                      if (MSG_PARENT(1).requires_grad)
                        MSG_PARENT(1).AccumulateGrad(g.cwiseProduct(xhat).colwise().sum());
                      if (MSG_PARENT(2).requires_grad)
                        MSG_PARENT(2).AccumulateGrad(g.colwise().sum());
                      if (MSG_PARENT(0).requires_grad) {
                        Matrix dxhat = g.array().rowwise() * MSG_PARENT(1).value.row(0).array();
                        Eigen::VectorXd m1 = dxhat.rowwise().sum() / double(c);
                        Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / double(c);
                        Matrix dx = dxhat.colwise() - m1;
                        dx -= (xhat.array().colwise() * m2.array()).matrix();
                        dx = dx.array().colwise() * inv_std.array();
                        MSG_PARENT(0).AccumulateGrad(dx);
                      }
                    });
}

Var Conv1d(const Var &x, const Var &weight, const Var &bias, int kernel, int stride,
           int pad_left, int pad_right) {
  const Eigen::Index t = x.rows();
  const Eigen::Index cin = x.cols();
  if (weight.rows() != kernel * cin) throw std::invalid_argument("Conv1d: weight rows != kernel*in");
  if (bias.rows() != 1 || bias.cols() != weight.cols())
    throw std::invalid_argument("Conv1d: bias shape mismatch");
  if (stride < 1 || kernel < 1) throw std::invalid_argument("Conv1d: bad kernel/stride");
  const Eigen::Index padded = t + pad_left + pad_right;
  if (padded < kernel) throw std::invalid_argument("Conv1d: input shorter than kernel");
  const Eigen::Index tout = (padded - kernel) / stride + 1;

  Matrix cols = Matrix::Zero(tout, kernel * cin);
  for (Eigen::Index o = 0; o < tout; ++o) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = o * stride + k - pad_left;
      if (src >= 0 && src < t) cols.block(o, k * cin, 1, cin) = x.value().row(src);
    }
  }
  Matrix out = cols * weight.value();
  out.rowwise() += bias.value().row(0);
  return MakeResult(std::move(out), {x, weight, bias},
                    [cols = std::move(cols), t, cin, kernel, stride, pad_left](Node &self) {
                      const Matrix &g = self.grad;
                      if (MSG_PARENT(1).requires_grad)
                        MSG_PARENT(1).AccumulateGrad(cols.transpose() * g);
                      if (MSG_PARENT(2).requires_grad)
                        MSG_PARENT(2).AccumulateGrad(g.colwise().sum());
                      if (MSG_PARENT(0).requires_grad) {
                        Matrix dcols = g * MSG_PARENT(1).value.transpose();
                        Matrix dx = Matrix::Zero(t, cin);
                        for (Eigen::Index o = 0; o < dcols.rows(); ++o) {
                          for (int k = 0; k < kernel; ++k) {
                            const Eigen::Index src = o * stride + k - pad_left;
                            if (src >= 0 && src < t) dx.row(src) += dcols.block(o, k * cin, 1, cin);
                          }
                        }
                        MSG_PARENT(0).AccumulateGrad(dx);
                      }
                    });
}

Var GatherRows(const Var &table, std::span<const int> indices) {
  Matrix v(static_cast<Eigen::Index>(indices.size()), table.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= table.rows())
      throw std::out_of_range("GatherRows: index " + std::to_string(idx) + " out of range");
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(idx);
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return MakeResult(std::move(v), {table}, [idx = std::move(idx)](Node &self) {
    Matrix g = Matrix::Zero(MSG_PARENT(0).value.rows(), MSG_PARENT(0).value.cols());
    for (size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var AvgPoolRows(const Var &x, int factor) {
  if (factor < 1) throw std::invalid_argument("AvgPoolRows: factor must be >= 1");
  const Eigen::Index out_rows = x.rows() / factor;
  Matrix v = Matrix::Zero(out_rows, x.cols());
  for (Eigen::Index o = 0; o < out_rows; ++o) {
    v.row(o) = x.value().middleRows(o * factor, factor).colwise().mean();
  }
  const Eigen::Index in_rows = x.rows();
  return MakeResult(std::move(v), {x}, [factor, in_rows](Node &self) {
    Matrix g = Matrix::Zero(in_rows, self.grad.cols());
    for (Eigen::Index o = 0; o < self.grad.rows(); ++o) {
      for (int k = 0; k < factor; ++k) g.row(o * factor + k) = self.grad.row(o) / double(factor);
    }
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var SliceRows(const Var &x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.rows())
    throw std::out_of_range("SliceRows: range out of bounds");
  const Eigen::Index rows = x.rows();
  return MakeResult(x.value().middleRows(start, count), {x}, [start, rows](Node &self) {
    Matrix g = Matrix::Zero(rows, self.grad.cols());
    g.middleRows(start, self.grad.rows()) = self.grad;
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var SliceCols(const Var &x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols())
    throw std::out_of_range("SliceCols: range out of bounds");
  const Eigen::Index cols = x.cols();
  return MakeResult(x.value().middleCols(start, count), {x}, [start, cols](Node &self) {
    Matrix g = Matrix::Zero(self.grad.rows(), cols);
    g.middleCols(start, self.grad.cols()) = self.grad;
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var ConcatCols(const std::vector<Var> &parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  Eigen::Index total = 0;
  for (const auto &p : parts) {
    if (p.rows() != parts[0].rows()) throw std::invalid_argument("ConcatCols: row mismatch");
    total += p.cols();
  }
  Matrix v(parts[0].rows(), total);
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto &p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    offsets.push_back(off);
    off += p.cols();
  }
  return MakeResult(std::move(v), parts, [offsets = std::move(offsets)](Node &self) {
    for (size_t i = 0; i < self.parents.size(); ++i) {
      Node &p = *self.parents[i];
      if (p.requires_grad) p.AccumulateGrad(self.grad.middleCols(offsets[i], p.value.cols()));
    }
  });
}

Var ConcatRows(const std::vector<Var> &parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  Eigen::Index total = 0;
  for (const auto &p : parts) {
    if (p.cols() != parts[0].cols()) throw std::invalid_argument("ConcatRows: column mismatch");
    total += p.rows();
  }
  Matrix v(total, parts[0].cols());
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto &p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    offsets.push_back(off);
    off += p.rows();
  }
  return MakeResult(std::move(v), parts, [offsets = std::move(offsets)](Node &self) {
    for (size_t i = 0; i < self.parents.size(); ++i) {
      Node &p = *self.parents[i];
      if (p.requires_grad) p.AccumulateGrad(self.grad.middleRows(offsets[i], p.value.rows()));
    }
  });
}

Var MaskRows(const Var &x, Eigen::Index valid_rows) {
  if (valid_rows >= x.rows()) return x;
  Matrix v = x.value();
  v.bottomRows(x.rows() - valid_rows).setZero();
  return MakeResult(std::move(v), {x}, [valid_rows](Node &self) {
    Matrix g = self.grad;
    g.bottomRows(g.rows() - valid_rows).setZero();
    MSG_PARENT(0).AccumulateGrad(g);
  });
}

Var MulConst(const Var &a, const Matrix &m) {
  if (a.rows() != m.rows() || a.cols() != m.cols())
    throw std::invalid_argument("MulConst: shape mismatch");
  return MakeResult(a.value().cwiseProduct(m), {a}, [m](Node &self) {
    MSG_PARENT(0).AccumulateGrad(self.grad.cwiseProduct(m));
  });
}

Var Sum(const Var &a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return MakeResult(std::move(v), {a}, [](Node &self) {
    MSG_PARENT(0).AccumulateGrad(
        Matrix::Constant(MSG_PARENT(0).value.rows(), MSG_PARENT(0).value.cols(), self.grad(0, 0)));
  });
}

Var Mean(const Var &a) {
  if (a.value().size() == 0) throw std::invalid_argument("Mean: empty input");
  const double n = static_cast<double>(a.value().size());
  Matrix v(1, 1);
  v(0, 0) = a.value().sum() / n;
  return MakeResult(std::move(v), {a}, [n](Node &self) {
    MSG_PARENT(0).AccumulateGrad(Matrix::Constant(MSG_PARENT(0).value.rows(),
                                                  MSG_PARENT(0).value.cols(),
                                                  self.grad(0, 0) / n));
  });
}

#undef MSG_PARENT

}  // namespace ad
}  // namespace msg
