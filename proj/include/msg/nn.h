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

#ifndef MSG_NN_H_
#define MSG_NN_H_

#include <string>
#include <utility>
#include <vector>

#include "msg/rng.h"
#include "msg/tensor.h"

namespace msg {
namespace nn {

using ad::Var;

/// Owns the trainable leaves of a model in registration order. The order is
/// part of the checkpoint format.
class ParamStore {
 public:
  Var Add(const std::string &name, Matrix init);
  Var XavierUniform(const std::string &name, Eigen::Index fan_in, Eigen::Index fan_out,
                    Eigen::Index rows, Eigen::Index cols, Rng &rng);
  Var Zeros(const std::string &name, Eigen::Index rows, Eigen::Index cols);
  Var Ones(const std::string &name, Eigen::Index rows, Eigen::Index cols);

  const std::vector<std::pair<std::string, Var>> &params() const { return params_; }
  std::vector<std::pair<std::string, Var>> &params() { return params_; }
  Var Find(const std::string &name) const;
  void ZeroGrad();
  size_t NumScalars() const;

 private:
  std::vector<std::pair<std::string, Var>> params_;
};

/// Training flag plus the randomness source for dropout. A null rng or
/// training == false disables dropout.
struct Context {
  bool training = false;
  Rng *rng = nullptr;
};

Var Dropout(const Var &x, double p, const Context &ctx);

struct LinearLayer {
  Var w, b;
  LinearLayer() = default;
  LinearLayer(ParamStore &ps, const std::string &name, Eigen::Index in, Eigen::Index out, Rng &rng);
  Var operator()(const Var &x) const { return ad::Linear(x, w, b); }
};

/// Same-length 1-D convolution when stride == 1.
struct ConvLayer {
  Var w, b;
  int kernel = 1;
  int stride = 1;
  ConvLayer() = default;
  ConvLayer(ParamStore &ps, const std::string &name, Eigen::Index in, Eigen::Index out,
            int kernel, int stride, Rng &rng);
  Var operator()(const Var &x) const;
};

struct LayerNorm {
  Var gamma, beta;
  LayerNorm() = default;
  LayerNorm(ParamStore &ps, const std::string &name, Eigen::Index dim);
  Var operator()(const Var &x) const { return ad::LayerNormRows(x, gamma, beta); }
};

struct MultiHeadAttention {
  LinearLayer qkv, out;
  int heads = 1;
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore &ps, const std::string &name, Eigen::Index dim, int heads, Rng &rng);
  /// Keys at rows >= valid_len are excluded.
  Var operator()(const Var &x, Eigen::Index valid_len) const;
};

/// Feed-forward Transformer block: self-attention and a two-layer
/// convolutional feed-forward, each with residual + layer norm.
struct FFTBlock {
  MultiHeadAttention attn;
  LayerNorm norm1, norm2;
  ConvLayer conv1, conv2;
  double dropout = 0.0;
  FFTBlock() = default;
  FFTBlock(ParamStore &ps, const std::string &name, Eigen::Index dim, int heads,
           Eigen::Index filter, int kernel, double dropout, Rng &rng);
  Var operator()(const Var &x, Eigen::Index valid_len, const Context &ctx) const;
};

struct GRULayer {
  LinearLayer input, hidden;
  Eigen::Index hidden_size = 0;
  GRULayer() = default;
  GRULayer(ParamStore &ps, const std::string &name, Eigen::Index in, Eigen::Index hidden, Rng &rng);
  /// Runs over all rows of x from a zero state; returns the final state (1 x hidden).
  Var Final(const Var &x) const;
};

/// Two conv/ReLU/LayerNorm/dropout stages and a scalar head per row.
struct VariancePredictor {
  ConvLayer conv1, conv2;
  LayerNorm norm1, norm2;
  LinearLayer head;
  double dropout = 0.0;
  VariancePredictor() = default;
  VariancePredictor(ParamStore &ps, const std::string &name, Eigen::Index dim,
                    Eigen::Index filter, int kernel, double dropout, Rng &rng);
  /// Returns rows x 1.
  Var operator()(const Var &x, const Context &ctx) const;
};

/// Sinusoidal positional table: even columns sin, odd columns cos.
Matrix SinusoidTable(Eigen::Index length, Eigen::Index dim);

}  // namespace nn
}  // namespace msg

#endif  // MSG_NN_H_
