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

#ifndef MSG_MIXER_H_
#define MSG_MIXER_H_

#include <string>
#include <vector>

#include "msg/generator.h"
#include "msg/rng.h"

namespace msg {

enum class MixMode { kOff, kBernoulli, kMixup };
enum class MixScope { kShared, kPerVariance };

MixMode ParseMixMode(const std::string &s);
MixScope ParseMixScope(const std::string &s);
std::string MixModeName(MixMode m);
std::string MixScopeName(MixScope s);

/// Ratios weight the anchor: r = 1 is the anchor, r = 0 the donor.
struct MixSpec {
  MixMode mode = MixMode::kMixup;
  MixScope scope = MixScope::kPerVariance;
  double r_s = 1.0;
  double r_p = 1.0;
  double r_e = 1.0;
  double alpha = 1.0;  // the first realized draw

  /// Throws std::invalid_argument when a ratio is outside [0, 1] or the
  /// mode/scope invariants do not hold.
  void Validate() const;
  /// Explicit ratios for inference-time mixing.
  static MixSpec Fixed(double r_s, double r_p, double r_e);
};

/// Bernoulli(0.5) or Uniform(0, 1) draws; one draw for shared scope, three for
/// per-variance scope. Throws for MixMode::kOff.
MixSpec SampleMixRatios(MixMode mode, MixScope scope, Rng &rng);

/// r * s_i + (1 - r) * s_j. r = 1 and r = 0 return the inputs unchanged.
Var MixStyles(const Var &s_i, const Var &s_j, double r);

struct MixedBatch {
  Var s_mix;       // 1 x d
  Var s_pitch;     // style the pitch predictor saw
  Var s_energy;    // style the energy predictor saw
  std::vector<int> durations;
  Var frame_hidden;
  Var pitch_pred;
  Var energy_pred;
  VarianceEmbeddings variance;
  Var condition;
  Var total_hidden;
  Var mel_norm;
  Var mel;
};

/// Mixed-style forward pass on the anchor transcript with the anchor's
/// ground-truth durations. Pitch and energy are predicted from their own
/// mixed styles. Throws std::invalid_argument for a same-speaker pair.
MixedBatch BuildMixedBatch(const UtteranceRecord &anchor, const UtteranceRecord &donor,
                           const MixSpec &spec, const Generator &generator,
                           const nn::Context &ctx);

/// Same pass from precomputed styles.
MixedBatch BuildMixedFromStyles(std::span<const int> phonemes, const std::vector<int> &durations,
                                const Var &s_anchor, const Var &s_donor, const MixSpec &spec,
                                const Generator &generator, const nn::Context &ctx);

/// Mean dequantized Hz of quantized pitch. Without a reference contour the
/// mean runs over frames predicted voiced; with one it runs over the frames
/// voiced in the reference, unvoiced predictions counting as 0 Hz. Returns 0
/// for an empty selection.
double MeanDequantizedF0(std::span<const int> pitch_bins, const ScalarStats &pitch_stats,
                         std::span<const double> reference_pitch = {});

/// Uniform choice among records whose speaker differs from the anchor's.
/// Returns -1 when there is none.
int PickDonor(std::span<const UtteranceRecord> records, int anchor_index, Rng &rng);

}  // namespace msg

#endif  // MSG_MIXER_H_
