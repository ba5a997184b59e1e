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

#include "msg/nn.h"

#include <cmath>
#include <stdexcept>

namespace msg {
namespace nn {

Var ParamStore::Add(const std::string &name, Matrix init) {
  for (const auto &[n, _] : params_) {
    if (n == name) throw std::logic_error("duplicate parameter name: " + name);
  }
  Var v(std::move(init), true);
  params_.emplace_back(name, v);
  return v;
}

Var ParamStore::XavierUniform(const std::string &name, Eigen::Index fan_in,
                              Eigen::Index fan_out, Eigen::Index rows, Eigen::Index cols,
                              Rng &rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform(-limit, limit);
  return Add(name, std::move(m));
}

Var ParamStore::Zeros(const std::string &name, Eigen::Index rows, Eigen::Index cols) {
  return Add(name, Matrix::Zero(rows, cols));
}

Var ParamStore::Ones(const std::string &name, Eigen::Index rows, Eigen::Index cols) {
  return Add(name, Matrix::Ones(rows, cols));
}

Var ParamStore::Find(const std::string &name) const {
  for (const auto &[n, v] : params_) {
    if (n == name) return v;
  }
  throw std::out_of_range("no parameter named " + name);
}

void ParamStore::ZeroGrad() {
  for (auto &[_, v] : params_) v.ZeroGrad();
}

size_t ParamStore::NumScalars() const {
  size_t n = 0;
  for (const auto &[_, v] : params_) n += static_cast<size_t>(v.value().size());
  return n;
}

Var Dropout(const Var &x, double p, const Context &ctx) {
  if (!ctx.training || ctx.rng == nullptr || p <= 0.0) return x;
  const double keep = 1.0 - p;
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = ctx.rng->Uniform() < keep ? 1.0 / keep : 0.0;
  }
  return ad::MulConst(x, mask);
}

LinearLayer::LinearLayer(ParamStore &ps, const std::string &name, Eigen::Index in,
                         Eigen::Index out, Rng &rng)
    : w(ps.XavierUniform(name + ".w", in, out, in, out, rng)),
      b(ps.Zeros(name + ".b", 1, out)) {}

ConvLayer::ConvLayer(ParamStore &ps, const std::string &name, Eigen::Index in, Eigen::Index out,
                     int kernel_, int stride_, Rng &rng)
    : w(ps.XavierUniform(name + ".w", in * kernel_, out * kernel_, in * kernel_, out, rng)),
      b(ps.Zeros(name + ".b", 1, out)),
      kernel(kernel_),
      stride(stride_) {}

Var ConvLayer::operator()(const Var &x) const {
  const int pad = (kernel - 1) / 2;
  return ad::Conv1d(x, w, b, kernel, stride, pad, kernel - 1 - pad);
}

LayerNorm::LayerNorm(ParamStore &ps, const std::string &name, Eigen::Index dim)
    : gamma(ps.Ones(name + ".gamma", 1, dim)), beta(ps.Zeros(name + ".beta", 1, dim)) {}

MultiHeadAttention::MultiHeadAttention(ParamStore &ps, const std::string &name,
                                       Eigen::Index dim, int heads_, Rng &rng)
    : qkv(ps, name + ".qkv", dim, 3 * dim, rng), out(ps, name + ".out", dim, dim, rng), heads(heads_) {
  if (heads < 1 || dim % heads != 0)
    throw std::invalid_argument("attention: dim must be divisible by heads");
}

Var MultiHeadAttention::operator()(const Var &x, Eigen::Index valid_len) const {
  const Eigen::Index dim = x.cols();
  const Eigen::Index dk = dim / heads;
  const double scale = 1.0 / std::sqrt(double(dk));
  Var proj = qkv(x);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var q = ad::SliceCols(proj, h * dk, dk);
    Var k = ad::SliceCols(proj, dim + h * dk, dk);
    Var v = ad::SliceCols(proj, 2 * dim + h * dk, dk);
    Var scores = ad::Scale(ad::MatMulNT(q, k), scale);
    Var probs = ad::SoftmaxRows(scores, valid_len);
    outs.push_back(ad::MatMul(probs, v));
  }
  Var cat = heads == 1 ? outs[0] : ad::ConcatCols(outs);
  return out(cat);
}

FFTBlock::FFTBlock(ParamStore &ps, const std::string &name, Eigen::Index dim, int heads,
                   Eigen::Index filter, int kernel, double dropout_, Rng &rng)
    : attn(ps, name + ".attn", dim, heads, rng),
      norm1(ps, name + ".norm1", dim),
      norm2(ps, name + ".norm2", dim),
      conv1(ps, name + ".conv1", dim, filter, kernel, 1, rng),
      conv2(ps, name + ".conv2", filter, dim, 1, 1, rng),
      dropout(dropout_) {}

Var FFTBlock::operator()(const Var &x, Eigen::Index valid_len, const Context &ctx) const {
  Var a = Dropout(attn(x, valid_len), dropout, ctx);
  Var h = ad::MaskRows(norm1(ad::Add(x, a)), valid_len);
  Var f = ad::MaskRows(ad::Relu(conv1(h)), valid_len);
  f = Dropout(conv2(f), dropout, ctx);
  return ad::MaskRows(norm2(ad::Add(h, f)), valid_len);
}

GRULayer::GRULayer(ParamStore &ps, const std::string &name, Eigen::Index in,
                   Eigen::Index hidden_, Rng &rng)
    : input(ps, name + ".input", in, 3 * hidden_, rng),
      hidden(ps, name + ".hidden", hidden_, 3 * hidden_, rng),
      hidden_size(hidden_) {}

Var GRULayer::Final(const Var &x) const {
  const Eigen::Index hs = hidden_size;
  Var xs = input(x);  // all steps at once
  Var h(Matrix::Zero(1, hs));
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    Var xt = ad::SliceRows(xs, t, 1);
    Var ht = hidden(h);
    Var z = ad::Sigmoid(ad::Add(ad::SliceCols(xt, 0, hs), ad::SliceCols(ht, 0, hs)));
    Var r = ad::Sigmoid(ad::Add(ad::SliceCols(xt, hs, hs), ad::SliceCols(ht, hs, hs)));
    Var n = ad::Tanh(ad::Add(ad::SliceCols(xt, 2 * hs, hs), ad::Mul(r, ad::SliceCols(ht, 2 * hs, hs))));
    // h = (1 - z) * n + z * h = n + z * (h - n)
    h = ad::Add(n, ad::Mul(z, ad::Sub(h, n)));
  }
  return h;
}

VariancePredictor::VariancePredictor(ParamStore &ps, const std::string &name, Eigen::Index dim,
                                     Eigen::Index filter, int kernel, double dropout_, Rng &rng)
    : conv1(ps, name + ".conv1", dim, filter, kernel, 1, rng),
      conv2(ps, name + ".conv2", filter, filter, kernel, 1, rng),
      norm1(ps, name + ".norm1", filter),
      norm2(ps, name + ".norm2", filter),
      head(ps, name + ".head", filter, 1, rng),
      dropout(dropout_) {}

Var VariancePredictor::operator()(const Var &x, const Context &ctx) const {
  Var h = Dropout(norm1(ad::Relu(conv1(x))), dropout, ctx);
  h = Dropout(norm2(ad::Relu(conv2(h))), dropout, ctx);
  return head(h);
}

Matrix SinusoidTable(Eigen::Index length, Eigen::Index dim) {
  Matrix pe(length, dim);
  for (Eigen::Index pos = 0; pos < length; ++pos) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -double(2 * (i / 2)) / double(dim));
      const double angle = double(pos) * rate;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace nn
}  // namespace msg
