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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "msg/corpus.h"
#include "msg/features.h"
#include "test_util.h"

namespace msg {
namespace {

std::vector<double> Sine(double hz, int n, double amp = 0.5) {
  std::vector<double> a(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<size_t>(i)] = amp * std::sin(2.0 * M_PI * hz * i / 22050.0);
  return a;
}

TEST_CASE("synthetic corpus is deterministic and self-consistent") {
  SynthConfig c;
  c.n_speakers = 1;
  c.n_utterances = 1;
  c.seed = 7;
  const SynthCorpus a = GenerateSynthCorpus(c);
  const SynthCorpus b = GenerateSynthCorpus(c);
  REQUIRE(a.records.size() == 1);
  CHECK(a.records == b.records);

  c.n_speakers = 3;
  c.n_utterances = 9;
  for (const auto &r : GenerateSynthCorpus(c).records) {
    CHECK(std::accumulate(r.targets.duration.begin(), r.targets.duration.end(), 0) == r.num_frames());
    CHECK_NOTHROW(ValidateRecord(r, c.vocab_size));
    CHECK((r.mel.array() >= kLogFloor).all());
  }
  c.n_utterances = 0;
  CHECK_THROWS_AS(GenerateSynthCorpus(c), std::invalid_argument);
}

TEST_CASE("speaking rate scales total frames up to per-phoneme rounding") {
  const auto inventory = ToyInventory(16);
  SpeakerProfile slow, normal;
  slow.rate = 2.0;
  normal.rate = 1.0;
  const std::vector<int> ids = {1, 4, 7, 2, 9};
  Rng r1(3), r2(3);
  const UtteranceRecord a = SynthesizeUtterance(slow, ids, inventory, 0.0, r1);
  const UtteranceRecord b = SynthesizeUtterance(normal, ids, inventory, 0.0, r2);
  int oracle_slow = 0, oracle_normal = 0;
  for (int id : ids) {
    const double d = inventory[static_cast<size_t>(id)].base_frames;
    oracle_slow += std::max(1, static_cast<int>(std::lround(2.0 * d)));
    oracle_normal += std::max(1, static_cast<int>(std::lround(d)));
  }
  CHECK(a.num_frames() == oracle_slow);
  CHECK(b.num_frames() == oracle_normal);
}

TEST_CASE("mel extraction examples") {
  MelOptions opts;
  const std::vector<double> zeros(22050, 0.0);
  const Matrix z = ExtractMel(zeros, opts);
  CHECK(z.rows() == 22050 / 256 + 1);
  CHECK((z.array() == kLogFloor).all());
  CHECK_THROWS_AS(ExtractMel(std::vector<double>{}, opts), std::invalid_argument);

  const Matrix m = ExtractMel(Sine(440.0, 22050), opts);
  const auto centers = MelCenterFrequencies(opts);
  int nearest = 0;
  for (int b = 1; b < opts.n_mels; ++b)
    if (std::abs(centers[b] - 440.0) < std::abs(centers[nearest] - 440.0)) nearest = b;
  Eigen::Index argmax = 0;
  m.row(m.rows() / 2).maxCoeff(&argmax);
  CHECK(argmax == nearest);
}

TEST_CASE("mel extraction shifts by one frame per hop") {
  Rng rng(5);
  std::vector<double> audio(8192);
  for (auto &v : audio) v = 0.3 * rng.Normal();
  std::vector<double> shifted(256, 0.0);
  shifted.insert(shifted.end(), audio.begin(), audio.end());
  const Matrix a = ExtractMel(audio);
  const Matrix b = ExtractMel(shifted);
  // Interior frames only: the first few see the padding edge.
  for (Eigen::Index t = 4; t + 4 < a.rows(); ++t)
    CHECK((a.row(t) - b.row(t + 1)).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("F0 extraction") {
  const auto silent = ExtractF0(std::vector<double>(4096, 0.0));
  CHECK(std::all_of(silent.begin(), silent.end(), [](double f) { return f == 0.0; }));
  const auto f0 = ExtractF0(Sine(220.0, 22050));
  int voiced = 0;
  for (double f : f0) {
    if (f <= 0.0) continue;
    ++voiced;
    CHECK(std::abs(f - 220.0) <= 3.0);
  }
  CHECK(voiced > static_cast<int>(f0.size()) / 2);
}

TEST_CASE("energy is the log of summed linear band energy") {
  Rng rng(6);
  const Matrix mel = testing::RandomMatrix(5, kNumMels, rng);
  const auto e = ExtractEnergy(mel);
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    double s = 0.0;
    for (Eigen::Index b = 0; b < mel.cols(); ++b) s += std::exp(mel(t, b));
    CHECK(e[static_cast<size_t>(t)] == doctest::Approx(std::log(s)).epsilon(1e-12));
  }
  const auto doubled = ExtractEnergy((mel.array() + std::log(2.0)).matrix());
  for (size_t t = 0; t < e.size(); ++t) CHECK(doubled[t] - e[t] == doctest::Approx(std::log(2.0)));
  const auto floor = ExtractEnergy(Matrix::Constant(4, kNumMels, kLogFloor));
  CHECK(floor[0] == floor[3]);
}

TEST_CASE("quantization examples") {
  ScalarStats s;
  s.mean = 10.0;
  s.std = 2.0;
  s.p1 = 0.0;
  s.p99 = 100.0;
  CHECK(EnergyBin(10.0, s) == 128);
  CHECK(EnergyBin(16.0, s) == 255);
  CHECK(EnergyBin(1e6, s) == 255);
  CHECK(EnergyBin(-1e6, s) == 0);
  int prev = -1;
  for (double v = 0.0; v < 20.0; v += 0.05) {
    const int b = EnergyBin(v, s);
    CHECK(b >= prev);
    prev = b;
  }
  for (int b = 1; b < kNumBins; ++b) CHECK(BinCenterZ(b) > BinCenterZ(b - 1));
  CHECK(PitchBin(0.0, s) == 0);
  CHECK(PitchBin(10.0, s) >= 1);
  CHECK(PitchHzFromBin(0, s) == 0.0);
  ScalarStats flat = s;
  flat.std = 0.0;
  const std::vector<double> v = {1.0, 2.0};
  CHECK_THROWS_AS(QuantizeValues(v, flat, false), DegenerateCorpusError);
  const std::vector<double> same(10, 3.0);
  CHECK_THROWS_AS(FitScalarStats(same), DegenerateCorpusError);
}

TEST_CASE("fitted statistics clip at the percentiles") {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(i);
  v.push_back(1e6);
  const ScalarStats s = FitScalarStats(v);
  CHECK(s.p1 == doctest::Approx(Percentile(v, 1.0)));
  CHECK(s.p99 == doctest::Approx(Percentile(v, 99.0)));
  CHECK(s.mean < 100.0);
  CHECK(s.std > 0.0);
}

TEST_CASE("feature cache roundtrip") {
  const std::string dir = testing::TempDir("cache");
  const std::string path = dir + "/c.msgc";
  WriteCache(path, std::vector<UtteranceRecord>{});
  CHECK(ReadCache(path).empty());

  SynthConfig c;
  c.n_utterances = 3;
  const auto records = GenerateSynthCorpus(c).records;
  WriteCache(path, records);
  CHECK(ReadCache(path) == records);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 7);
  CHECK_THROWS_AS(ReadCache(path), FormatError);

  {
    std::ofstream bad(path, std::ios::binary);
    bad << "XXXX";
  }
  CHECK_THROWS_AS(ReadCache(path), FormatError);
}

TEST_CASE("statistics and manifest roundtrip") {
  SynthConfig c;
  const auto records = GenerateSynthCorpus(c).records;
  const FeatureStats s = FitFeatureStats(records);
  const FeatureStats back = StatsFromJson(StatsToJson(s));
  CHECK(back.pitch.mean == s.pitch.mean);
  CHECK(back.energy.std == s.energy.std);
  CHECK(back.mel_mean == s.mel_mean);
  CHECK(back.fitted);

  const std::string dir = testing::TempDir("manifest");
  std::vector<ManifestEntry> entries = {{"u0", 0, {1, 2, 3}, "synthetic"}, {"u1", 1, {4}, "a.wav"}};
  WriteManifest(dir + "/m.tsv", entries);
  const auto read = ReadManifest(dir + "/m.tsv");
  REQUIRE(read.size() == 2);
  CHECK(read[1].phonemes == std::vector<int>{4});
  CHECK(read[1].source == "a.wav");
  {
    std::ofstream out(dir + "/bad.tsv");
    out << FormatManifestLine(entries[0]) << "\nbroken line\n";
  }
  try {
    ReadManifest(dir + "/bad.tsv");
    FAIL("expected a format error");
  } catch (const FormatError &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("uniform durations give the remainder to the first phonemes") {
  CHECK(UniformDurations(10, 3) == std::vector<int>{4, 3, 3});
  CHECK(UniformDurations(2, 3) == std::vector<int>{1, 1, 0});
}

}  // namespace
}  // namespace msg
