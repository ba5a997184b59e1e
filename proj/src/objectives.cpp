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

#include "msg/objectives.h"

#include <cmath>
#include <stdexcept>

#include "msg/log.h"

namespace msg {

void LossWeights::Validate() const {
  if (!(lambda_fm >= 0.0 && mu_var >= 0.0 && nu_mix >= 0.0 && rec >= 0.0))
    throw std::invalid_argument("loss weights must be non-negative");
}

Ablation ParseAblation(const std::string &name) {
  if (name == "full" || name == "no_rec") return Ablation::kFull;
  if (name == "no_fm") return Ablation::kNoFm;
  if (name == "no_rec_no_fm") return Ablation::kNoRecNoFm;
  if (name == "rec_only") return Ablation::kRecOnly;
  if (name == "plus_rec") return Ablation::kPlusRec;
  throw std::invalid_argument("unknown ablation '" + name +
                              "' (expected full, no_fm, no_rec_no_fm, rec_only, plus_rec)");
}

std::string AblationName(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoFm: return "no_fm";
    case Ablation::kNoRecNoFm: return "no_rec_no_fm";
    case Ablation::kRecOnly: return "rec_only";
    case Ablation::kPlusRec: return "plus_rec";
  }
  return "full";
}

LossMode LossMode::From(Ablation a, bool asc_active) {
  LossMode m;
  m.var = true;
  switch (a) {
    case Ablation::kFull:  // adv + fm + var
      m.adv = true, m.fm = true, m.rec = false;
      break;
    case Ablation::kNoFm:  // adv + rec + var
      m.adv = true, m.fm = false, m.rec = true;
      break;
    case Ablation::kNoRecNoFm:  // adv + var
      m.adv = true, m.fm = false, m.rec = false;
      break;
    case Ablation::kRecOnly:  // rec + var, no discriminator
      m.adv = false, m.fm = false, m.rec = true;
      break;
    case Ablation::kPlusRec:  // adv + rec + fm + var
      m.adv = true, m.fm = true, m.rec = true;
      break;
  }
  m.mix = asc_active && m.adv;
  return m;
}

bool LossBundle::AllFinite() const { return FirstNonFinite().empty(); }

std::string LossBundle::FirstNonFinite() const {
  const std::pair<const char *, double> fields[] = {
      {"l_duration", l_duration}, {"l_pitch", l_pitch}, {"l_energy", l_energy},
      {"l_var", l_var},           {"l_rec", l_rec},     {"l_adv", l_adv},
      {"l_fm", l_fm},             {"l_mix", l_mix},     {"l_total_G", l_total},
      {"l_total_D", l_total_d}};
  for (const auto &[name, v] : fields) {
    if (!std::isfinite(v)) return name;
  }
  return "";
}

VarianceLosses VarianceLoss(const Matrix &duration_frames, const Var &log_duration_pred,
                            const Var &pitch, const Var &pitch_pred, const Var &energy,
                            const Var &energy_pred) {
  if (duration_frames.rows() != log_duration_pred.rows() ||
      duration_frames.cols() != log_duration_pred.cols())
    throw std::invalid_argument("duration target/prediction shape mismatch");
  Var log_target(Matrix((duration_frames.array() + 1.0).log()));
  VarianceLosses out;
  out.duration = ad::Mean(ad::Square(ad::Sub(log_target, log_duration_pred)));
  out.pitch = ad::Mean(ad::Square(ad::Sub(pitch, pitch_pred)));
  out.energy = ad::Mean(ad::Square(ad::Sub(energy, energy_pred)));
  out.total = ad::Add(ad::Add(out.duration, out.pitch), out.energy);
  return out;
}

Var ReconstructionLoss(const Var &target, const Var &prediction) {
  return ad::Mean(ad::Abs(ad::Sub(target, prediction)));
}

namespace {

Var MeanSquareFrom(const Var &scores, double label) {
  return ad::Mean(ad::Square(ad::AddScalar(scores, -label)));
}

Var Accumulate(const Var &acc, const Var &term) { return acc.defined() ? ad::Add(acc, term) : term; }

}  // namespace

Var DiscriminatorLoss(const ScaleScores &real, const ScaleScores &fake, const ScaleScores *mix) {
  if (real.size() != fake.size() || (mix && mix->size() != real.size()))
    throw std::invalid_argument("score lists cover different scale counts");
  Var total;
  int skipped = 0;
  for (size_t k = 0; k < real.size(); ++k) {
    if (!real[k].defined() || !fake[k].defined()) {
      ++skipped;
      continue;
    }
    total = Accumulate(total, MeanSquareFrom(real[k], 1.0));
    total = Accumulate(total, MeanSquareFrom(fake[k], 0.0));
    if (mix && (*mix)[k].defined()) total = Accumulate(total, MeanSquareFrom((*mix)[k], 0.0));
  }
  if (skipped > 0) MSG_INFO << skipped << " discriminator scale(s) omitted from the loss";
  return total.defined() ? total : Var::Scalar(0.0);
}

Var GeneratorAdversarialLoss(const ScaleScores &fake) {
  Var total;
  for (const auto &s : fake) {
    if (s.defined()) total = Accumulate(total, MeanSquareFrom(s, 1.0));
  }
  return total.defined() ? total : Var::Scalar(0.0);
}

Var FeatureMatchingLoss(const FeatureMaps &real, const FeatureMaps &fake,
                        FeatureMatchingScope scope) {
  if (real.size() != fake.size()) throw std::invalid_argument("feature maps cover different scales");
  const size_t scales = scope == FeatureMatchingScope::kFirstScale ? std::min<size_t>(1, real.size())
                                                                   : real.size();
  Var total;
  for (size_t k = 0; k < scales; ++k) {
    if (real[k].size() != fake[k].size())
      throw std::invalid_argument("feature map counts differ at a scale");
    for (size_t i = 0; i < real[k].size(); ++i) {
      // Mean absolute difference == (1 / N_i) * L1 norm.
      total = Accumulate(total, ad::Mean(ad::Abs(ad::Sub(real[k][i], fake[k][i]))));
    }
  }
  return total.defined() ? total : Var::Scalar(0.0);
}

double GeneratorTotal(const LossBundle &b, const LossWeights &w, const LossMode &mode) {
  double total = 0.0;
  if (mode.adv) total += b.l_adv;
  if (mode.fm) total += w.lambda_fm * b.l_fm;
  if (mode.var) total += w.mu_var * b.l_var;
  if (mode.rec) total += w.rec * b.l_rec;
  if (mode.mix) total += w.nu_mix * b.l_mix;
  return total;
}

Var GeneratorObjective(const GeneratorTerms &t, const LossWeights &w, const LossMode &mode) {
  Var total;
  auto add = [&](bool on, const Var &term, double weight, const char *name) {
    if (!on) return;
    if (!term.defined()) throw std::logic_error(std::string("missing loss term ") + name);
    total = Accumulate(total, weight == 1.0 ? term : ad::Scale(term, weight));
  };
  add(mode.adv, t.adv, 1.0, "adv");
  add(mode.fm, t.fm, w.lambda_fm, "fm");
  add(mode.var, t.var, w.mu_var, "var");
  add(mode.rec, t.rec, w.rec, "rec");
  add(mode.mix, t.mix, w.nu_mix, "mix");
  return total.defined() ? total : Var::Scalar(0.0);
}

}  // namespace msg
