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

#include "doctest.h"

#include <vector>

#include "msg/tensor.h"
#include "test_util.h"

namespace msg {
namespace {

using ad::Var;
using testing::GradCheck;
using testing::RandomMatrix;

constexpr double kGradTol = 1e-3;

TEST_CASE("elementwise ops match finite differences") {
  Rng rng(11);
  const Matrix x = RandomMatrix(3, 4, rng);
  const Matrix w = RandomMatrix(3, 4, rng);
  const Var wv(w);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Mul(v, wv)); }, x) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Tanh(v)); }, x) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Sigmoid(v)); }, x) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Mean(ad::Square(v)); }, x) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Mul(ad::LeakyRelu(v, 0.2), wv)); }, x) <
        kGradTol);
}

TEST_CASE("matmul, linear and broadcasting ops match finite differences") {
  Rng rng(12);
  const Var b(RandomMatrix(4, 5, rng));
  const Var bias(RandomMatrix(1, 5, rng));
  const Var row(RandomMatrix(1, 4, rng));
  const Matrix x = RandomMatrix(3, 4, rng);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::MatMul(v, b))); }, x) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::Linear(v, b, bias))); }, x) <
        kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::MatMulNT(v, v))); }, x) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::MulRow(v, row))); }, x) < kGradTol);
  // Gradient into the broadcast row itself.
  const Var xv(x);
  CHECK(GradCheck([&](const Var &r) { return ad::Sum(ad::Square(ad::AddRow(xv, r))); },
                  row.value()) < kGradTol);
}

TEST_CASE("softmax, layer norm and convolution match finite differences") {
  Rng rng(13);
  const Matrix x = RandomMatrix(5, 3, rng);
  const Var gamma(RandomMatrix(1, 3, rng)), beta(RandomMatrix(1, 3, rng));
  const Var proj(RandomMatrix(5, 3, rng));
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Mul(ad::SoftmaxRows(v), proj)); }, x) <
        kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Mul(ad::LayerNormRows(v, gamma, beta), proj)); },
                  x) < kGradTol);
  const Var w(RandomMatrix(3 * 3, 2, rng)), bias(RandomMatrix(1, 2, rng));
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::Conv1d(v, w, bias, 3, 1, 1, 1))); },
                  x) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::Conv1d(v, w, bias, 3, 2, 1, 1))); },
                  x) < kGradTol);
}

TEST_CASE("gather, pooling and slicing match finite differences") {
  Rng rng(14);
  const Matrix x = RandomMatrix(4, 3, rng);
  const std::vector<int> idx = {0, 0, 2, 3, 3, 3};
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::GatherRows(v, idx))); }, x) <
        kGradTol);
  const Matrix y = RandomMatrix(7, 2, rng);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::AvgPoolRows(v, 3))); }, y) < kGradTol);
  CHECK(GradCheck([&](const Var &v) { return ad::Sum(ad::Square(ad::SliceCols(v, 1, 2))); }, x) < kGradTol);
  CHECK(GradCheck(
            [&](const Var &v) {
              return ad::Sum(ad::Square(ad::ConcatRows({ad::SliceRows(v, 2, 2), ad::SliceRows(v, 0, 1)})));
            },
            x) < kGradTol);
}

TEST_CASE("conv1d forward equals a direct sum") {
  Rng rng(15);
  const Matrix x = RandomMatrix(6, 2, rng);
  const Matrix w = RandomMatrix(3 * 2, 4, rng);
  const Matrix b = RandomMatrix(1, 4, rng);
  const Matrix y = ad::Conv1d(Var(x), Var(w), Var(b), 3, 1, 1, 1).value();
  REQUIRE(y.rows() == 6);
  for (int t = 0; t < 6; ++t) {
    for (int o = 0; o < 4; ++o) {
      double acc = b(0, o);
      for (int k = 0; k < 3; ++k) {
        const int src = t + k - 1;
        if (src < 0 || src >= 6) continue;
        for (int c = 0; c < 2; ++c) acc += x(src, c) * w(k * 2 + c, o);
      }
      CHECK(y(t, o) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("detach cuts the tape and gradients accumulate until zeroed") {
  Var x(Matrix::Constant(1, 1, 2.0), true);
  Var y = ad::Add(ad::Square(x), ad::Square(x.Detach()));
  y.Backward();
  CHECK(x.grad()(0, 0) == doctest::Approx(4.0));
  ad::Square(x).Backward();
  CHECK(x.grad()(0, 0) == doctest::Approx(8.0));
  x.ZeroGrad();
  CHECK((!x.has_grad() || x.grad()(0, 0) == 0.0));
}

}  // namespace
}  // namespace msg
