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

#include "msg/mixer.h"

#include <stdexcept>

namespace msg {

MixMode ParseMixMode(const std::string &s) {
  if (s == "off") return MixMode::kOff;
  if (s == "bernoulli") return MixMode::kBernoulli;
  if (s == "mixup") return MixMode::kMixup;
  throw std::invalid_argument("unknown mix mode '" + s + "' (expected bernoulli, mixup, off)");
}

MixScope ParseMixScope(const std::string &s) {
  if (s == "shared") return MixScope::kShared;
  if (s == "per_variance") return MixScope::kPerVariance;
  throw std::invalid_argument("unknown mix scope '" + s + "' (expected shared, per_variance)");
}

std::string MixModeName(MixMode m) {
  switch (m) {
    case MixMode::kOff: return "off";
    case MixMode::kBernoulli: return "bernoulli";
    case MixMode::kMixup: return "mixup";
  }
  return "off";
}

std::string MixScopeName(MixScope s) {
  return s == MixScope::kShared ? "shared" : "per_variance";
}

void MixSpec::Validate() const {
  for (double r : {r_s, r_p, r_e}) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("mix ratios must lie in [0, 1]");
    if (mode == MixMode::kBernoulli && r != 0.0 && r != 1.0)
      throw std::invalid_argument("bernoulli mix ratios must be 0 or 1");
  }
  if (scope == MixScope::kShared && (r_s != r_p || r_s != r_e))
    throw std::invalid_argument("shared scope requires r_s == r_p == r_e");
}

MixSpec MixSpec::Fixed(double r_s, double r_p, double r_e) {
  MixSpec m;
  m.mode = MixMode::kMixup;
  m.scope = (r_s == r_p && r_s == r_e) ? MixScope::kShared : MixScope::kPerVariance;
  m.r_s = r_s;
  m.r_p = r_p;
  m.r_e = r_e;
  m.alpha = r_s;
  m.Validate();
  return m;
}

MixSpec SampleMixRatios(MixMode mode, MixScope scope, Rng &rng) {
  if (mode == MixMode::kOff) throw std::invalid_argument("cannot sample ratios with mixing off");
  auto draw = [&]() { return mode == MixMode::kBernoulli ? (rng.Bernoulli(0.5) ? 1.0 : 0.0) : rng.Uniform(); };
  MixSpec m;
  m.mode = mode;
  m.scope = scope;
  m.r_s = draw();
  if (scope == MixScope::kShared) {
    m.r_p = m.r_e = m.r_s;
  } else {
    m.r_p = draw();
    m.r_e = draw();
  }
  m.alpha = m.r_s;
  return m;
}

Var MixStyles(const Var &s_i, const Var &s_j, double r) {
  if (s_i.rows() != s_j.rows() || s_i.cols() != s_j.cols())
    throw std::invalid_argument("style embeddings differ in shape");
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("mix ratio must lie in [0, 1]");
  if (r == 1.0) return s_i;
  if (r == 0.0) return s_j;
  return ad::Add(ad::Scale(s_i, r), ad::Scale(s_j, 1.0 - r));
}

MixedBatch BuildMixedFromStyles(std::span<const int> phonemes, const std::vector<int> &durations,
                                const Var &s_anchor, const Var &s_donor, const MixSpec &spec,
                                const Generator &generator, const nn::Context &ctx) {
  spec.Validate();
  MixedBatch b;
  b.s_mix = MixStyles(s_anchor, s_donor, spec.r_s);
  b.s_pitch = MixStyles(s_anchor, s_donor, spec.r_p);
  b.s_energy = MixStyles(s_anchor, s_donor, spec.r_e);
  GeneratorOutput o = generator.Infer(phonemes, b.s_mix, b.s_pitch, b.s_energy, ctx, durations);
  b.durations = std::move(o.durations);
  b.frame_hidden = o.frame_hidden;
  b.pitch_pred = o.pitch_pred;
  b.energy_pred = o.energy_pred;
  b.variance = std::move(o.variance);
  b.condition = o.condition;
  b.total_hidden = o.total_hidden;
  b.mel_norm = o.mel_norm;
  b.mel = o.mel;
  return b;
}

MixedBatch BuildMixedBatch(const UtteranceRecord &anchor, const UtteranceRecord &donor,
                           const MixSpec &spec, const Generator &generator,
                           const nn::Context &ctx) {
  if (anchor.speaker_id == donor.speaker_id)
    throw std::invalid_argument("anchor and donor must come from different speakers");
  Var s_i = generator.EncodeStyle(anchor.mel, ctx);
  Var s_j = generator.EncodeStyle(donor.mel, ctx);
  return BuildMixedFromStyles(anchor.phonemes, anchor.targets.duration, s_i, s_j, spec, generator,
                              ctx);
}

double MeanDequantizedF0(std::span<const int> pitch_bins, const ScalarStats &pitch_stats,
                         std::span<const double> reference_pitch) {
  if (!reference_pitch.empty() && reference_pitch.size() != pitch_bins.size())
    throw std::invalid_argument("reference contour length differs from the prediction");
  double sum = 0.0;
  int n = 0;
  for (size_t t = 0; t < pitch_bins.size(); ++t) {
    const bool use = reference_pitch.empty() ? pitch_bins[t] > 0 : reference_pitch[t] > 0.0;
    if (!use) continue;
    sum += PitchHzFromBin(pitch_bins[t], pitch_stats);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

int PickDonor(std::span<const UtteranceRecord> records, int anchor_index, Rng &rng) {
  std::vector<int> candidates;
  const int spk = records[static_cast<size_t>(anchor_index)].speaker_id;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].speaker_id != spk) candidates.push_back(static_cast<int>(i));
  }
  if (candidates.empty()) return -1;
  return candidates[rng.Below(candidates.size())];
}

}  // namespace msg
