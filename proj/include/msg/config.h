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

#ifndef MSG_CONFIG_H_
#define MSG_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include "msg/corpus.h"
#include "msg/discriminator.h"
#include "msg/generator.h"
#include "msg/mixer.h"
#include "msg/objectives.h"

namespace msg {

/// Thrown for unknown keys, bad types and invalid values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// What the discriminator sees as its condition input.
enum class ConditionMode { kLearned, kNoise };

struct TrainConfig {
  int batch_size = 2;
  int total_steps = 2000;
  int warmup_steps = 400;
  uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  double base_lr = 1e-4;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  int checkpoint_every = 0;  // 0 = final checkpoint only
  LossWeights weights;
  Ablation ablation = Ablation::kFull;
  ConditionMode condition = ConditionMode::kLearned;
  FeatureMatchingScope fm_scope = FeatureMatchingScope::kAllScales;
  MixMode mix_mode = MixMode::kOff;
  MixScope mix_scope = MixScope::kPerVariance;

  void Validate() const;
};

struct CorpusConfig {
  std::string manifest;  // empty = synthetic corpus
  SynthConfig synth;
};

struct ExperimentConfig {
  CorpusConfig corpus;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainConfig train;

  /// Cross-section consistency (cond_dim == d_model, vocab sizes).
  void Validate() const;
};

/// Strict parse: every key must be known; missing keys keep their defaults.
ExperimentConfig ConfigFromJson(const std::string &text);
ExperimentConfig LoadConfig(const std::string &path);
/// Fully resolved config, pretty-printed.
std::string ConfigToJson(const ExperimentConfig &config);

/// 64-bit FNV-1a over the canonical JSON of everything that affects model
/// shapes and training dynamics. total_steps, checkpoint_every and the
/// manifest path are excluded so that a run may be extended.
uint64_t ConfigHash(const ExperimentConfig &config);
std::string HashHex(uint64_t h);

/// FNV-1a 64.
uint64_t Fnv1a64(const std::string &bytes);

std::string ConditionModeName(ConditionMode m);
ConditionMode ParseConditionMode(const std::string &s);

}  // namespace msg

#endif  // MSG_CONFIG_H_
