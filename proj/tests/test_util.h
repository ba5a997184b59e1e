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

#ifndef MSG_TESTS_TEST_UTIL_H_
#define MSG_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "msg/config.h"
#include "msg/corpus.h"
#include "msg/rng.h"
#include "msg/tensor.h"

namespace msg {
namespace testing {

inline Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, Rng &rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.Normal();
  return m;
}

inline double RelErr(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

/// Largest relative error between the analytic gradient of f at x and a
/// central difference with step h. f builds a fresh graph from its input.
inline double GradCheck(const std::function<ad::Var(const ad::Var &)> &f, const Matrix &x0,
                        double h = 1e-5) {
  ad::Var x(x0, true);
  ad::Var y = f(x);
  y.Backward();
  Matrix analytic = x.has_grad() ? x.grad() : Matrix::Zero(x0.rows(), x0.cols());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Matrix plus = x0, minus = x0;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    const double numeric =
        (f(ad::Var(plus)).item() - f(ad::Var(minus)).item()) / (2.0 * h);
    const double g = analytic.data()[i];
    // Near-zero entries are compared absolutely.
    const double err = std::max(std::abs(g), std::abs(numeric)) < 1e-6
                           ? std::abs(g - numeric)
                           : RelErr(g, numeric);
    worst = std::max(worst, err);
  }
  return worst;
}

/// Smallest configuration the models accept; fast enough for unit tests.
inline ExperimentConfig TinyConfig() {
  ExperimentConfig c;
  c.generator.d_model = 8;
  c.generator.attn_heads = 2;
  c.generator.conv_kernel = 3;
  c.generator.ff_filter = 16;
  c.generator.style_channels = 8;
  c.generator.predictor_filter = 8;
  c.discriminator.channels = 8;
  c.discriminator.cond_dim = 8;
  c.corpus.synth.n_speakers = 2;
  c.corpus.synth.n_utterances = 4;
  c.train.batch_size = 2;
  c.train.total_steps = 4;
  c.train.warmup_steps = 4;
  c.train.base_lr = 1e-3;
  return c;
}

inline SynthCorpus TinyCorpus(const ExperimentConfig &c) { return GenerateSynthCorpus(c.corpus.synth); }

/// Fresh directory under the system temp path.
inline std::string TempDir(const std::string &tag) {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / ("msg_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace testing
}  // namespace msg

#endif  // MSG_TESTS_TEST_UTIL_H_
