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

#ifndef MSG_OBJECTIVES_H_
#define MSG_OBJECTIVES_H_

#include <string>
#include <vector>

#include "msg/tensor.h"

namespace msg {

using ad::Var;

struct LossWeights {
  double lambda_fm = 10.0;
  double mu_var = 1.0;
  double nu_mix = 1.0;
  double rec = 1.0;  // only used by ablations that include the reconstruction term

  void Validate() const;
};

/// Which generator terms are in play. The five named configurations are the
/// loss-function ablations.
enum class Ablation { kFull, kNoFm, kNoRecNoFm, kRecOnly, kPlusRec };

Ablation ParseAblation(const std::string &name);
std::string AblationName(Ablation a);

struct LossMode {
  bool adv = true;
  bool fm = true;
  bool var = true;
  bool rec = false;
  bool mix = false;

  static LossMode From(Ablation a, bool asc_active);
  /// The discriminator is trained whenever an adversarial term is used.
  bool trains_discriminator() const { return adv || mix; }
};

struct LossBundle {
  double l_duration = 0.0;
  double l_pitch = 0.0;
  double l_energy = 0.0;
  double l_var = 0.0;
  double l_rec = 0.0;
  double l_adv = 0.0;
  double l_fm = 0.0;
  double l_mix = 0.0;
  double l_total = 0.0;    // generator objective
  double l_total_d = 0.0;  // discriminator objective

  bool AllFinite() const;
  /// Name of the first non-finite field, or "".
  std::string FirstNonFinite() const;
};

struct VarianceLosses {
  Var duration, pitch, energy, total;
};

/// MSE terms. duration_frames holds the integer frame counts (n x 1); its
/// target is log(D + 1). Pitch and energy are compared in normalized units.
VarianceLosses VarianceLoss(const Matrix &duration_frames, const Var &log_duration_pred,
                            const Var &pitch, const Var &pitch_pred, const Var &energy,
                            const Var &energy_pred);

/// Mean absolute error over all entries.
Var ReconstructionLoss(const Var &target, const Var &prediction);

/// Per-scale score lists; undefined entries mark skipped scales.
using ScaleScores = std::vector<Var>;
using FeatureMaps = std::vector<std::vector<Var>>;

/// sum_k mean((real_k - 1)^2) + mean(fake_k^2) [+ mean(mix_k^2)].
Var DiscriminatorLoss(const ScaleScores &real, const ScaleScores &fake,
                      const ScaleScores *mix = nullptr);
/// sum_k mean((fake_k - 1)^2); also the mixed-style adversarial term.
Var GeneratorAdversarialLoss(const ScaleScores &fake);

enum class FeatureMatchingScope { kAllScales, kFirstScale };

/// sum_k sum_i (1/N_i) * ||real_ki - fake_ki||_1 with N_i the unit count of
/// block output i.
Var FeatureMatchingLoss(const FeatureMaps &real, const FeatureMaps &fake,
                        FeatureMatchingScope scope = FeatureMatchingScope::kAllScales);

/// Weighted generator objective from component values.
double GeneratorTotal(const LossBundle &bundle, const LossWeights &weights, const LossMode &mode);

/// The same weighted sum on graph values, for backpropagation. Terms that are
/// inactive in `mode` may be undefined.
struct GeneratorTerms {
  Var adv, fm, var, rec, mix;
};
Var GeneratorObjective(const GeneratorTerms &terms, const LossWeights &weights, const LossMode &mode);

}  // namespace msg

#endif  // MSG_OBJECTIVES_H_
