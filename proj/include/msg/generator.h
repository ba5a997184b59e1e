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

#ifndef MSG_GENERATOR_H_
#define MSG_GENERATOR_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "msg/corpus.h"
#include "msg/nn.h"

namespace msg {

using ad::Var;

struct GeneratorConfig {
  int d_model = 64;
  int attn_heads = 2;
  int conv_kernel = 9;
  int ff_filter = 256;
  int n_encoder_blocks = 4;
  int n_decoder_blocks = 4;
  int vocab_size = 16;
  int n_mels = kNumMels;
  int style_channels = 64;
  int predictor_filter = 64;
  int predictor_kernel = 3;
  double dropout = 0.1;

  /// Throws std::invalid_argument when an invariant is violated.
  void Validate() const;
};

/// Thrown when inference predicts an all-zero duration sequence.
class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an operation needs fitted corpus statistics.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct VarianceEmbeddings {
  std::vector<int> pitch_bins;
  std::vector<int> energy_bins;
  Var p;  // T x d, rows of the pitch table
  Var e;  // T x d, rows of the energy table
};

/// Everything one generator pass produces. `condition` is what the
/// discriminator sees; `mel` is in log-mel units and `mel_norm` in the
/// per-band normalized units the discriminator consumes.
struct GeneratorOutput {
  Var style;          // 1 x d
  Var phoneme_hidden; // n x d
  Var log_duration;   // n x 1
  std::vector<int> durations;
  Var frame_hidden;   // T x d
  Var pitch_pred;     // T x 1, normalized
  Var energy_pred;    // T x 1, normalized
  VarianceEmbeddings variance;
  Var condition;      // T x d
  Var total_hidden;   // T x d
  Var mel_norm;       // T x n_mels
  Var mel;            // T x n_mels
};

/// Phoneme encoder, style encoder, length regulator, style-conditional
/// variance adaptor and decoder.
class Generator {
 public:
  Generator(const GeneratorConfig &config, uint64_t seed);

  const GeneratorConfig &config() const { return config_; }
  nn::ParamStore &params() { return params_; }
  const nn::ParamStore &params() const { return params_; }

  void SetStats(const FeatureStats &stats);
  const FeatureStats &stats() const { return stats_; }

  /// Positional table rows [0, length).
  Matrix PositionalTable(Eigen::Index length) const;

  /// ids may be right-padded; rows >= valid_len are masked out of attention
  /// and zeroed. valid_len < 0 means no padding.
  Var EncodePhonemes(std::span<const int> ids, const nn::Context &ctx,
                     Eigen::Index valid_len = -1) const;
  /// Style vector from a reference mel in log-mel units. Inputs shorter than
  /// 64 frames are right-padded with the log floor.
  Var EncodeStyle(const Matrix &mel, const nn::Context &ctx) const;
  Var PredictLogDuration(const Var &phoneme_hidden, const Var &style, const nn::Context &ctx) const;
  Var PredictPitch(const Var &frame_hidden, const Var &style, const nn::Context &ctx) const;
  Var PredictEnergy(const Var &frame_hidden, const Var &style, const nn::Context &ctx) const;

  /// Quantized lookup from ground-truth values (Hz and energy units).
  VarianceEmbeddings EmbedTargets(std::span<const double> pitch_hz,
                                  std::span<const double> energy) const;
  /// Quantized lookup from predicted normalized values.
  VarianceEmbeddings EmbedPredicted(const Var &pitch_z, const Var &energy_z) const;

  /// Decoder on H_total; returns the normalized mel.
  Var Decode(const Var &total_hidden, const nn::Context &ctx) const;
  /// Normalized -> log-mel units.
  Var Denormalize(const Var &mel_norm) const;
  Matrix NormalizeMel(const Matrix &mel) const;

  /// Training pass: ground-truth durations, pitch and energy.
  GeneratorOutput TeacherForced(const UtteranceRecord &record, const nn::Context &ctx) const;

  /// Inference from an explicit style. Pitch and energy are predicted with
  /// their own (possibly mixed) style vectors; durations are predicted unless
  /// given.
  GeneratorOutput Infer(std::span<const int> phonemes, const Var &style, const Var &pitch_style,
                        const Var &energy_style, const nn::Context &ctx,
                        std::optional<std::vector<int>> durations = std::nullopt) const;

  /// Full inference: style from the reference mel, everything else predicted
  /// unless ground-truth durations are supplied.
  GeneratorOutput Synthesize(std::span<const int> phonemes, const Matrix &reference_mel,
                             const nn::Context &ctx,
                             std::optional<std::vector<int>> durations = std::nullopt) const;

  /// Parameter-name prefixes, one per architectural component.
  static std::vector<std::string> ParameterGroups();

 private:
  GeneratorConfig config_;
  nn::ParamStore params_;
  FeatureStats stats_;

  Var phoneme_table_;
  std::vector<nn::FFTBlock> encoder_;
  std::vector<nn::ConvLayer> style_convs_;
  std::vector<nn::LayerNorm> style_norms_;
  nn::GRULayer style_gru_;
  nn::LinearLayer style_proj_;
  nn::VariancePredictor duration_predictor_;
  nn::VariancePredictor pitch_predictor_;
  nn::VariancePredictor energy_predictor_;
  Var pitch_table_;
  Var energy_table_;
  std::vector<nn::FFTBlock> decoder_;
  nn::LinearLayer mel_proj_;
};

/// Row i of h repeated durations[i] times. Throws std::invalid_argument on
/// size mismatch or negative entries, SynthesisError when the total is 0.
Var LengthRegulate(const Var &phoneme_hidden, std::span<const int> durations);

/// Index map used by LengthRegulate.
std::vector<int> ExpandIndices(std::span<const int> durations);

/// Inference-time frame counts: max(0, round(exp(d) - 1)).
std::vector<int> DurationsFromLog(const Var &log_duration);

/// c = H_mel + s + p + e and H_total = c + PE.
struct ConditionParts {
  Var condition;
  Var total_hidden;
};
ConditionParts AssembleCondition(const Var &frame_hidden, const Var &style, const Var &p,
                                 const Var &e, const Matrix &positional);

}  // namespace msg

#endif  // MSG_GENERATOR_H_
