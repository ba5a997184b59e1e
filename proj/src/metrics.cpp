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

#include "msg/metrics.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace msg {

std::vector<double> FrameCepstrum(std::span<const double> log_mel) {
  const size_t n = log_mel.size();
  std::vector<double> c(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i)
      acc += log_mel[i] * std::cos(M_PI * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
    c[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
  }
  return c;
}

double Mcd13(const Matrix &mel_ref, const Matrix &mel_gen) {
  if (mel_ref.rows() != mel_gen.rows() || mel_ref.cols() != mel_gen.cols())
    throw std::invalid_argument("mcd13 needs equal frame counts and band counts");
  if (mel_ref.rows() == 0) throw std::invalid_argument("mcd13 of empty spectrograms");
  if (mel_ref.cols() <= kMcdOrder) throw std::invalid_argument("too few mel bands for 13 cepstra");
  // The DCT is linear, so transform the difference once per frame.
  const Matrix diff = mel_ref - mel_gen;
  const double k = 10.0 / std::log(10.0);
  double total = 0.0;
  for (Eigen::Index t = 0; t < diff.rows(); ++t) {
    const auto c = FrameCepstrum(std::span<const double>(diff.row(t).data(), diff.cols()));
    double sq = 0.0;
    for (int d = 1; d <= kMcdOrder; ++d) sq += c[d] * c[d];
    total += k * std::sqrt(2.0 * sq);
  }
  return total / static_cast<double>(diff.rows());
}

double F0Rmse(std::span<const double> f0_ref, std::span<const double> f0_gen) {
  if (f0_ref.size() != f0_gen.size()) throw std::invalid_argument("f0_rmse needs equal lengths");
  double sq = 0.0;
  size_t n = 0;
  for (size_t t = 0; t < f0_ref.size(); ++t) {
    if (f0_ref[t] > 0.0 && f0_gen[t] > 0.0) {
      const double d = f0_ref[t] - f0_gen[t];
      sq += d * d;
      ++n;
    }
  }
  return n == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(n));
}

std::vector<double> SpeakerFeatures(const UtteranceRecord &r) {
  std::vector<double> f;
  double f0 = 0.0;
  int voiced = 0;
  for (double p : r.targets.pitch) {
    if (p > 0.0) {
      f0 += p;
      ++voiced;
    }
  }
  f.push_back(voiced ? f0 / voiced : 0.0);
  double e = 0.0;
  for (double v : r.targets.energy) e += v;
  f.push_back(r.targets.energy.empty() ? 0.0 : e / static_cast<double>(r.targets.energy.size()));
  const RowVector mean = r.mel.colwise().mean();
  f.insert(f.end(), mean.data(), mean.data() + mean.size());
  return f;
}

double SpeakerTop1(std::span<const UtteranceRecord> generated,
                   std::span<const UtteranceRecord> reference) {
  if (generated.empty()) throw std::invalid_argument("no generated utterances to classify");
  std::map<int, std::vector<std::vector<double>>> by_speaker;
  std::vector<std::vector<double>> all;
  for (const auto &r : reference) {
    auto f = SpeakerFeatures(r);
    by_speaker[r.speaker_id].push_back(f);
    all.push_back(std::move(f));
  }
  if (by_speaker.size() < 2) throw std::invalid_argument("speaker_top1 needs >= 2 reference speakers");
  const size_t dim = all.front().size();
  std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
  for (const auto &f : all) {
    if (f.size() != dim) throw std::invalid_argument("reference utterances differ in band count");
    for (size_t i = 0; i < dim; ++i) mu[i] += f[i];
  }
  for (auto &m : mu) m /= static_cast<double>(all.size());
  for (const auto &f : all)
    for (size_t i = 0; i < dim; ++i) sd[i] += (f[i] - mu[i]) * (f[i] - mu[i]);
  for (auto &s : sd) s = std::sqrt(s / static_cast<double>(all.size()));
  auto z = [&](const std::vector<double> &f) {
    std::vector<double> out(dim);
    for (size_t i = 0; i < dim; ++i) out[i] = sd[i] > 1e-12 ? (f[i] - mu[i]) / sd[i] : 0.0;
    return out;
  };
  // F0, energy and the mel block count equally.
  std::vector<double> weight(dim, dim > 2 ? 1.0 / static_cast<double>(dim - 2) : 1.0);
  weight[0] = weight[1] = 1.0;
  std::vector<std::pair<int, std::vector<double>>> centroids;  // ascending speaker id
  for (const auto &[spk, feats] : by_speaker) {
    std::vector<double> c(dim, 0.0);
    for (const auto &f : feats) {
      const auto zf = z(f);
      for (size_t i = 0; i < dim; ++i) c[i] += zf[i];
    }
    for (auto &v : c) v /= static_cast<double>(feats.size());
    centroids.emplace_back(spk, std::move(c));
  }
  int correct = 0;
  for (const auto &g : generated) {
    const auto f = SpeakerFeatures(g);
    if (f.size() != dim) throw std::invalid_argument("generated utterance has the wrong band count");
    const auto zf = z(f);
    int best = -1;
    double best_d = 0.0;
    for (const auto &[spk, c] : centroids) {
      double d = 0.0;
      for (size_t i = 0; i < dim; ++i) d += weight[i] * (zf[i] - c[i]) * (zf[i] - c[i]);
      if (best < 0 || d < best_d) {
        best = spk;
        best_d = d;
      }
    }
    correct += best == g.speaker_id ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(generated.size());
}

std::string MetricReport::ToCsv() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "mcd13,f0_rmse,speaker_top1,n_utterances\n%.9g,%.9g,%.9g,%d\n",
                mcd13, f0_rmse, speaker_top1, n_utterances);
  return buf;
}

std::string MetricReport::ToTable() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "+--------------+------------+\n"
                "| metric       |      value |\n"
                "+--------------+------------+\n"
                "| MCD13 (dB)   | %10.4f |\n"
                "| F0 RMSE (Hz) | %10.4f |\n"
                "| Top-1        | %10.4f |\n"
                "| utterances   | %10d |\n"
                "+--------------+------------+\n",
                mcd13, f0_rmse, speaker_top1, n_utterances);
  return buf;
}

MetricReport EvaluatePairs(std::span<const UtteranceRecord> references,
                           std::span<const UtteranceRecord> generated,
                           std::span<const UtteranceRecord> speaker_reference) {
  if (references.size() != generated.size() || references.empty())
    throw std::invalid_argument("evaluation needs matching, non-empty reference/generated lists");
  MetricReport rep;
  rep.n_utterances = static_cast<int>(references.size());
  for (size_t i = 0; i < references.size(); ++i) {
    rep.mcd13 += Mcd13(references[i].mel, generated[i].mel);
    rep.f0_rmse += F0Rmse(references[i].targets.pitch, generated[i].targets.pitch);
  }
  rep.mcd13 /= rep.n_utterances;
  rep.f0_rmse /= rep.n_utterances;
  rep.speaker_top1 = SpeakerTop1(generated, speaker_reference);
  return rep;
}

UtteranceRecord SynthesizeRecord(const Generator &generator, const UtteranceRecord &reference) {
  nn::Context ctx;
  GeneratorOutput o =
      generator.Synthesize(reference.phonemes, reference.mel, ctx, reference.targets.duration);
  UtteranceRecord r;
  r.phonemes = reference.phonemes;
  r.speaker_id = reference.speaker_id;
  r.mel = o.mel.value();
  r.targets.duration = o.durations;
  const auto &stats = generator.stats();
  for (size_t t = 0; t < o.variance.pitch_bins.size(); ++t) {
    r.targets.pitch.push_back(PitchHzFromBin(o.variance.pitch_bins[t], stats.pitch));
    r.targets.energy.push_back(
        Denormalize(BinCenterZ(o.variance.energy_bins[t]), stats.energy));
  }
  return r;
}

MetricReport EvaluateGenerator(const Generator &generator, std::span<const UtteranceRecord> eval,
                               std::span<const UtteranceRecord> speaker_reference) {
  std::vector<UtteranceRecord> gen;
  gen.reserve(eval.size());
  for (const auto &r : eval) gen.push_back(SynthesizeRecord(generator, r));
  return EvaluatePairs(eval, gen, speaker_reference);
}

}  // namespace msg
