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

#include "msg/mixer.h"
#include "test_util.h"

namespace msg {
namespace {

using ad::Var;

TEST_CASE("ratio sampling") {
  Rng rng(71);
  for (int i = 0; i < 50; ++i) {
    const MixSpec b = SampleMixRatios(MixMode::kBernoulli, MixScope::kShared, rng);
    CHECK((b.r_s == 0.0 || b.r_s == 1.0));
    CHECK(b.r_s == b.r_p);
    CHECK(b.r_p == b.r_e);
    const MixSpec m = SampleMixRatios(MixMode::kMixup, MixScope::kPerVariance, rng);
    for (double r : {m.r_s, m.r_p, m.r_e}) CHECK((r >= 0.0 && r <= 1.0));
    CHECK_NOTHROW(m.Validate());
  }
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) {
    const MixSpec x = SampleMixRatios(MixMode::kMixup, MixScope::kPerVariance, a);
    const MixSpec y = SampleMixRatios(MixMode::kMixup, MixScope::kPerVariance, b);
    CHECK(x.r_s == y.r_s);
    CHECK(x.r_e == y.r_e);
  }
  CHECK_THROWS_AS(SampleMixRatios(MixMode::kOff, MixScope::kShared, rng), std::invalid_argument);
}

TEST_CASE("spec validation") {
  MixSpec s;
  s.mode = MixMode::kBernoulli;
  s.r_p = 0.5;
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  CHECK_THROWS_AS(MixSpec::Fixed(1.2, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(MixSpec::Fixed(-0.1, 1.0, 1.0), std::invalid_argument);
  CHECK(ParseMixMode("mixup") == MixMode::kMixup);
  CHECK(ParseMixScope(MixScopeName(MixScope::kShared)) == MixScope::kShared);
  CHECK_THROWS_AS(ParseMixMode("sometimes"), std::invalid_argument);
}

TEST_CASE("style interpolation") {
  Matrix a(1, 2), b(1, 2);
  a << 1, 0;
  b << 0, 1;
  const Var si(a), sj(b);
  CHECK(MixStyles(si, sj, 1.0).value() == a);
  CHECK(MixStyles(si, sj, 0.0).value() == b);
  const Matrix half = MixStyles(si, sj, 0.5).value();
  CHECK(half(0, 0) == 0.5);
  CHECK(half(0, 1) == 0.5);
}

struct Fixture {
  ExperimentConfig config = testing::TinyConfig();
  SynthCorpus corpus = testing::TinyCorpus(config);
  FeatureStats stats = FitFeatureStats(corpus.records);
  Generator gen{config.generator, 3};
  nn::Context eval;
  Fixture() { gen.SetStats(stats); }
  const UtteranceRecord &anchor() const { return corpus.records[0]; }
  const UtteranceRecord &donor() const { return corpus.records[1]; }
};

TEST_CASE("degenerate ratios reproduce the single-speaker paths") {
  Fixture f;
  const MixedBatch one = BuildMixedBatch(f.anchor(), f.donor(), MixSpec::Fixed(1, 1, 1), f.gen, f.eval);
  const Var s_a = f.gen.EncodeStyle(f.anchor().mel, f.eval);
  const Var s_d = f.gen.EncodeStyle(f.donor().mel, f.eval);
  const GeneratorOutput pure_a =
      f.gen.Infer(f.anchor().phonemes, s_a, s_a, s_a, f.eval, f.anchor().targets.duration);
  CHECK(one.mel.value() == pure_a.mel.value());
  CHECK(one.condition.value() == pure_a.condition.value());

  const MixedBatch zero = BuildMixedBatch(f.anchor(), f.donor(), MixSpec::Fixed(0, 0, 0), f.gen, f.eval);
  const GeneratorOutput pure_d =
      f.gen.Infer(f.anchor().phonemes, s_d, s_d, s_d, f.eval, f.anchor().targets.duration);
  CHECK(zero.mel.value() == pure_d.mel.value());
  CHECK(zero.durations == f.anchor().targets.duration);
}

TEST_CASE("mixed condition decomposes exactly") {
  Fixture f;
  const MixedBatch b = BuildMixedBatch(f.anchor(), f.donor(), MixSpec::Fixed(0.3, 0.6, 0.9), f.gen, f.eval);
  const Matrix rest = b.frame_hidden.value() + b.variance.p.value() + b.variance.e.value();
  const Matrix diff = b.condition.value() - rest;
  for (Eigen::Index t = 0; t < diff.rows(); ++t)
    CHECK((diff.row(t) - b.s_mix.value()).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix pe = f.gen.PositionalTable(b.condition.rows());
  CHECK(b.total_hidden.value() == b.condition.value() + pe);
}

TEST_CASE("same-speaker pairs are rejected and donors differ in speaker") {
  Fixture f;
  CHECK_THROWS_AS(BuildMixedBatch(f.anchor(), f.corpus.records[2], MixSpec::Fixed(1, 1, 1), f.gen, f.eval),
                  std::invalid_argument);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const int d = PickDonor(f.corpus.records, 0, rng);
    REQUIRE(d >= 0);
    CHECK(f.corpus.records[d].speaker_id != f.anchor().speaker_id);
  }
  const std::vector<UtteranceRecord> single = {f.anchor()};
  CHECK(PickDonor(single, 0, rng) == -1);
}

TEST_CASE("mean dequantized F0") {
  ScalarStats s;
  s.mean = 180.0;
  s.std = 40.0;
  const std::vector<int> bins = {0, 128, 128, 0};
  CHECK(MeanDequantizedF0(bins, s) == doctest::Approx(PitchHzFromBin(128, s)));
  const std::vector<double> ref = {100.0, 100.0, 0.0, 100.0};
  CHECK(MeanDequantizedF0(bins, s, ref) == doctest::Approx(PitchHzFromBin(128, s) / 3.0));
  CHECK(MeanDequantizedF0(std::vector<int>{0, 0}, s) == 0.0);
}

}  // namespace
}  // namespace msg
