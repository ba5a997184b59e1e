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

#ifndef MSG_TRAINER_H_
#define MSG_TRAINER_H_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msg/config.h"
#include "msg/discriminator.h"
#include "msg/generator.h"
#include "msg/objectives.h"
#include "msg/rng.h"

namespace msg {

/// Raised when any loss term of a step is NaN or infinite. what() names the
/// offending term and lists every component.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(const std::string &msg, LossBundle bundle)
      : std::runtime_error(msg), bundle_(bundle) {}
  const LossBundle &bundle() const { return bundle_; }

 private:
  LossBundle bundle_;
};

class CheckpointNotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointIncompatibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// base_lr * min(step^-0.5, step * warmup^-1.5) / warmup^-0.5; peaks at
/// base_lr when step == warmup. Throws for step < 1.
double LrSchedule(int step, int warmup_steps, double base_lr);

/// Adam over one parameter store.
class Adam {
 public:
  Adam() = default;
  Adam(const nn::ParamStore &params, double beta1, double beta2, double eps);

  /// One update with the current gradients. Parameters without a gradient
  /// are left untouched.
  void Step(nn::ParamStore &params, double lr);

  int64_t steps() const { return t_; }
  std::vector<Matrix> &first_moments() { return m_; }
  std::vector<Matrix> &second_moments() { return v_; }
  const std::vector<Matrix> &first_moments() const { return m_; }
  const std::vector<Matrix> &second_moments() const { return v_; }
  void set_steps(int64_t t) { t_ = t; }

 private:
  double beta1_ = 0.9, beta2_ = 0.98, eps_ = 1e-9;
  int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

/// Global L2 norm of all gradients in the store.
double GradientNorm(const nn::ParamStore &params);
/// Scales gradients so the global norm is at most max_norm; returns the norm
/// before clipping.
double ClipGradients(nn::ParamStore &params, double max_norm);

/// Squared gradient mass per parameter-name prefix after the last backward.
std::map<std::string, double> GradientMassByGroup(const nn::ParamStore &params,
                                                  const std::vector<std::string> &groups);

/// Pitch and energy predictor targets in normalized units (T x 1 each).
Matrix PitchTargets(const UtteranceRecord &r, const FeatureStats &stats);
Matrix EnergyTargets(const UtteranceRecord &r, const FeatureStats &stats);

/// Teacher-forced mean |y_hat - y| over all mel bins, in log-mel units,
/// averaged over records. Evaluation mode (no dropout).
double HeldInMae(const Generator &generator, std::span<const UtteranceRecord> records);

/// Everything the optimizer loop needs: models, optimizers, step counter and
/// the master rng.
class TrainState {
 public:
  TrainState(const ExperimentConfig &config, const FeatureStats &stats);

  const ExperimentConfig &config() const { return config_; }
  uint64_t config_hash() const { return config_hash_; }
  int step() const { return step_; }
  Generator &generator() { return *generator_; }
  Discriminator &discriminator() { return *discriminator_; }
  const Generator &generator() const { return *generator_; }
  const Discriminator &discriminator() const { return *discriminator_; }
  const FeatureStats &stats() const { return stats_; }
  Rng &rng() { return rng_; }

  /// Override the learning rate for the next steps (tests use 0).
  void set_lr_override(std::optional<double> lr) { lr_override_ = lr; }
  double CurrentLr() const;

  /// One discriminator update followed by one generator update on `batch`.
  /// A non-finite loss throws NonFiniteLossError before the update that
  /// would consume it.
  LossBundle TrainStep(std::span<const UtteranceRecord> batch,
                       std::span<const UtteranceRecord> donors);

  /// Draws the next batch and runs TrainStep.
  LossBundle Step(std::span<const UtteranceRecord> corpus);

  /// Binary checkpoint: "MSGK" header, config hash, step, rng state, embedded
  /// config and stats, then named arrays.
  void Save(const std::string &path) const;
  std::string Serialize() const;
  /// Restores into this state. Throws CheckpointNotFoundError or
  /// CheckpointIncompatibleError (hash mismatch) or FormatError.
  void Load(const std::string &path);

 private:
  ExperimentConfig config_;
  uint64_t config_hash_ = 0;
  FeatureStats stats_;
  std::unique_ptr<Generator> generator_;
  std::unique_ptr<Discriminator> discriminator_;
  Adam adam_g_, adam_d_;
  Rng rng_;
  int step_ = 0;
  std::optional<double> lr_override_;
};

/// Header fields of a checkpoint file without building models.
struct CheckpointInfo {
  uint64_t config_hash = 0;
  int step = 0;
  std::string config_json;
  std::string stats_json;
};
CheckpointInfo ReadCheckpointInfo(const std::string &path);

/// Loads models from a checkpoint using its embedded config and stats.
std::unique_ptr<TrainState> LoadTrainState(const std::string &path);

std::string LossHistoryHeader();
std::string FormatLossRow(int step, const LossBundle &b, double lr);

struct TrainOptions {
  std::string run_dir;      // loss_history.csv and checkpoints go here
  std::string resume_path;  // optional checkpoint
  /// Called after every step (tests and progress output).
  std::function<void(int, const LossBundle &)> on_step;
};

struct TrainResult {
  std::unique_ptr<TrainState> state;
  std::vector<LossBundle> history;  // the steps run in this call
  std::string final_checkpoint;
};

/// Runs total_steps of training, checkpointing every checkpoint_every steps
/// and at the end. On resume the history file is truncated to the
/// checkpoint's step and continued. Throws ConfigError for ASC on a
/// single-speaker corpus.
TrainResult Train(const ExperimentConfig &config, std::span<const UtteranceRecord> corpus,
                  const FeatureStats &stats, const TrainOptions &options);

}  // namespace msg

#endif  // MSG_TRAINER_H_
