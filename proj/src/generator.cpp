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

#include "msg/generator.h"

#include <algorithm>
#include <cmath>

namespace msg {

namespace {

constexpr int kStyleLayers = 6;
constexpr int kStyleMinFrames = 1 << kStyleLayers;

}  // namespace

void GeneratorConfig::Validate() const {
  if (d_model < 1 || attn_heads < 1 || d_model % attn_heads != 0)
    throw std::invalid_argument("d_model must be a positive multiple of attn_heads");
  if (n_encoder_blocks != 4 || n_decoder_blocks != 4)
    throw std::invalid_argument("encoder and decoder use exactly 4 FFT blocks");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) throw std::invalid_argument("conv_kernel must be odd");
  if (predictor_kernel < 1 || predictor_kernel % 2 == 0)
    throw std::invalid_argument("predictor_kernel must be odd");
  if (vocab_size < 1 || n_mels < 1 || ff_filter < 1 || style_channels < 1 || predictor_filter < 1)
    throw std::invalid_argument("generator sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
}

Generator::Generator(const GeneratorConfig &config, uint64_t seed) : config_(config) {
  config_.Validate();
  Rng rng(DeriveSeed(seed, 101));
  const int d = config_.d_model;

  phoneme_table_ = params_.XavierUniform("phoneme_encoder.embedding", config_.vocab_size, d,
                                         config_.vocab_size, d, rng);
  for (int i = 0; i < config_.n_encoder_blocks; ++i) {
    encoder_.emplace_back(params_, "phoneme_encoder.block" + std::to_string(i), d,
                          config_.attn_heads, config_.ff_filter, config_.conv_kernel,
                          config_.dropout, rng);
  }

  int in = config_.n_mels;
  for (int i = 0; i < kStyleLayers; ++i) {
    const std::string name = "style_encoder.conv" + std::to_string(i);
    style_convs_.emplace_back(params_, name, in, config_.style_channels, 3, 2, rng);
    style_norms_.emplace_back(params_, "style_encoder.norm" + std::to_string(i), config_.style_channels);
    in = config_.style_channels;
  }
  style_gru_ = nn::GRULayer(params_, "style_encoder.gru", config_.style_channels,
                            config_.style_channels, rng);
  style_proj_ = nn::LinearLayer(params_, "style_encoder.proj", config_.style_channels, d, rng);

  duration_predictor_ = nn::VariancePredictor(params_, "duration_predictor", d,
                                              config_.predictor_filter, config_.predictor_kernel,
                                              config_.dropout, rng);
  pitch_predictor_ = nn::VariancePredictor(params_, "pitch_predictor", d, config_.predictor_filter,
                                           config_.predictor_kernel, config_.dropout, rng);
  energy_predictor_ = nn::VariancePredictor(params_, "energy_predictor", d,
                                            config_.predictor_filter, config_.predictor_kernel,
                                            config_.dropout, rng);
  pitch_table_ = params_.XavierUniform("pitch_embedding.table", kNumBins, d, kNumBins, d, rng);
  energy_table_ = params_.XavierUniform("energy_embedding.table", kNumBins, d, kNumBins, d, rng);

  for (int i = 0; i < config_.n_decoder_blocks; ++i) {
    decoder_.emplace_back(params_, "decoder.block" + std::to_string(i), d, config_.attn_heads,
                          config_.ff_filter, config_.conv_kernel, config_.dropout, rng);
  }
  mel_proj_ = nn::LinearLayer(params_, "decoder.proj", d, config_.n_mels, rng);
  // Starts at the per-band corpus mean.
  mel_proj_.w.mutable_value().setZero();
}

std::vector<std::string> Generator::ParameterGroups() {
  return {"phoneme_encoder",  "style_encoder",   "duration_predictor", "pitch_predictor",
          "energy_predictor", "pitch_embedding", "energy_embedding",   "decoder"};
}

void Generator::SetStats(const FeatureStats &stats) {
  if (!stats.fitted) throw StateError("statistics are not fitted");
  if (stats.mel_mean.cols() != config_.n_mels || stats.mel_std.cols() != config_.n_mels)
    throw std::invalid_argument("mel statistics do not match n_mels");
  stats_ = stats;
}

Matrix Generator::PositionalTable(Eigen::Index length) const {
  return nn::SinusoidTable(length, config_.d_model);
}

Var Generator::EncodePhonemes(std::span<const int> ids, const nn::Context &ctx,
                              Eigen::Index valid_len) const {
  if (ids.empty()) throw std::invalid_argument("empty phoneme sequence");
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size)
      throw std::invalid_argument("phoneme id " + std::to_string(id) + " outside vocabulary");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index valid = (valid_len < 0 || valid_len > n) ? n : valid_len;
  Var x = ad::Add(ad::GatherRows(phoneme_table_, ids), Var(PositionalTable(n)));
  x = ad::MaskRows(x, valid);
  for (const auto &block : encoder_) x = block(x, valid, ctx);
  return x;
}

Var Generator::EncodeStyle(const Matrix &mel, const nn::Context &ctx) const {
  if (!stats_.fitted) throw StateError("style encoder needs fitted mel statistics");
  if (mel.cols() != config_.n_mels) throw std::invalid_argument("reference mel has wrong band count");
  if (mel.rows() < 1) throw std::invalid_argument("reference mel is empty");
  Matrix padded = mel;
  if (padded.rows() < kStyleMinFrames) {
    padded.conservativeResize(kStyleMinFrames, Eigen::NoChange);
    padded.bottomRows(kStyleMinFrames - mel.rows()).setConstant(kLogFloor);
  }
  Var h(NormalizeMel(padded));
  for (size_t i = 0; i < style_convs_.size(); ++i) {
    h = style_norms_[i](ad::Relu(style_convs_[i](h)));
    h = nn::Dropout(h, config_.dropout, ctx);
  }
  return ad::Tanh(style_proj_(style_gru_.Final(h)));
}

Var Generator::PredictLogDuration(const Var &phoneme_hidden, const Var &style,
                                  const nn::Context &ctx) const {
  return duration_predictor_(ad::AddRow(phoneme_hidden, style), ctx);
}

Var Generator::PredictPitch(const Var &frame_hidden, const Var &style, const nn::Context &ctx) const {
  return pitch_predictor_(ad::AddRow(frame_hidden, style), ctx);
}

Var Generator::PredictEnergy(const Var &frame_hidden, const Var &style,
                             const nn::Context &ctx) const {
  return energy_predictor_(ad::AddRow(frame_hidden, style), ctx);
}

VarianceEmbeddings Generator::EmbedTargets(std::span<const double> pitch_hz,
                                           std::span<const double> energy) const {
  if (!stats_.fitted) throw StateError("variance embedding needs fitted statistics");
  if (pitch_hz.size() != energy.size()) throw std::invalid_argument("pitch/energy length mismatch");
  VarianceEmbeddings out;
  out.pitch_bins = QuantizeValues(pitch_hz, stats_.pitch, true);
  out.energy_bins = QuantizeValues(energy, stats_.energy, false);
  out.p = ad::GatherRows(pitch_table_, out.pitch_bins);
  out.e = ad::GatherRows(energy_table_, out.energy_bins);
  return out;
}

VarianceEmbeddings Generator::EmbedPredicted(const Var &pitch_z, const Var &energy_z) const {
  if (!stats_.fitted) throw StateError("variance embedding needs fitted statistics");
  if (pitch_z.rows() != energy_z.rows()) throw std::invalid_argument("pitch/energy length mismatch");
  VarianceEmbeddings out;
  for (Eigen::Index t = 0; t < pitch_z.rows(); ++t) {
    out.pitch_bins.push_back(BinFromZ(pitch_z.value()(t, 0)));
    out.energy_bins.push_back(BinFromZ(energy_z.value()(t, 0)));
  }
  out.p = ad::GatherRows(pitch_table_, out.pitch_bins);
  out.e = ad::GatherRows(energy_table_, out.energy_bins);
  return out;
}

Var Generator::Decode(const Var &total_hidden, const nn::Context &ctx) const {
  if (total_hidden.rows() < 1) throw std::invalid_argument("decoder input is empty");
  Var h = total_hidden;
  for (const auto &block : decoder_) h = block(h, h.rows(), ctx);
  return mel_proj_(h);
}

Var Generator::Denormalize(const Var &mel_norm) const {
  return ad::AddRow(ad::MulRow(mel_norm, Var(stats_.mel_std)), Var(stats_.mel_mean));
}

Matrix Generator::NormalizeMel(const Matrix &mel) const {
  Matrix out = (mel.rowwise() - stats_.mel_mean).array().rowwise() / stats_.mel_std.array();
  return out;
}

GeneratorOutput Generator::TeacherForced(const UtteranceRecord &record,
                                         const nn::Context &ctx) const {
  GeneratorOutput o;
  o.style = EncodeStyle(record.mel, ctx);
  o.phoneme_hidden = EncodePhonemes(record.phonemes, ctx);
  o.log_duration = PredictLogDuration(o.phoneme_hidden, o.style, ctx);
  o.durations = record.targets.duration;
  o.frame_hidden = LengthRegulate(o.phoneme_hidden, o.durations);
  if (o.frame_hidden.rows() != record.mel.rows())
    throw std::invalid_argument("durations do not sum to the mel length");
  o.pitch_pred = PredictPitch(o.frame_hidden, o.style, ctx);
  o.energy_pred = PredictEnergy(o.frame_hidden, o.style, ctx);
  o.variance = EmbedTargets(record.targets.pitch, record.targets.energy);
  auto parts = AssembleCondition(o.frame_hidden, o.style, o.variance.p, o.variance.e,
                                 PositionalTable(o.frame_hidden.rows()));
  o.condition = parts.condition;
  o.total_hidden = parts.total_hidden;
  o.mel_norm = Decode(o.total_hidden, ctx);
  o.mel = Denormalize(o.mel_norm);
  return o;
}

GeneratorOutput Generator::Infer(std::span<const int> phonemes, const Var &style,
                                 const Var &pitch_style, const Var &energy_style,
                                 const nn::Context &ctx,
                                 std::optional<std::vector<int>> durations) const {
  GeneratorOutput o;
  o.style = style;
  o.phoneme_hidden = EncodePhonemes(phonemes, ctx);
  o.log_duration = PredictLogDuration(o.phoneme_hidden, style, ctx);
  o.durations = durations ? *durations : DurationsFromLog(o.log_duration);
  o.frame_hidden = LengthRegulate(o.phoneme_hidden, o.durations);
  o.pitch_pred = PredictPitch(o.frame_hidden, pitch_style, ctx);
  o.energy_pred = PredictEnergy(o.frame_hidden, energy_style, ctx);
  o.variance = EmbedPredicted(o.pitch_pred, o.energy_pred);
  auto parts = AssembleCondition(o.frame_hidden, style, o.variance.p, o.variance.e,
                                 PositionalTable(o.frame_hidden.rows()));
  o.condition = parts.condition;
  o.total_hidden = parts.total_hidden;
  o.mel_norm = Decode(o.total_hidden, ctx);
  o.mel = Denormalize(o.mel_norm);
  return o;
}

GeneratorOutput Generator::Synthesize(std::span<const int> phonemes, const Matrix &reference_mel,
                                      const nn::Context &ctx,
                                      std::optional<std::vector<int>> durations) const {
  Var s = EncodeStyle(reference_mel, ctx);
  return Infer(phonemes, s, s, s, ctx, std::move(durations));
}

std::vector<int> ExpandIndices(std::span<const int> durations) {
  std::vector<int> idx;
  for (size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] < 0) throw std::invalid_argument("negative duration");
    idx.insert(idx.end(), static_cast<size_t>(durations[i]), static_cast<int>(i));
  }
  return idx;
}

Var LengthRegulate(const Var &phoneme_hidden, std::span<const int> durations) {
  if (static_cast<Eigen::Index>(durations.size()) != phoneme_hidden.rows())
    throw std::invalid_argument("one duration per phoneme is required");
  const auto idx = ExpandIndices(durations);
  if (idx.empty()) throw SynthesisError("total duration is zero; nothing to synthesize");
  return ad::GatherRows(phoneme_hidden, idx);
}

std::vector<int> DurationsFromLog(const Var &log_duration) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(log_duration.rows()));
  for (Eigen::Index i = 0; i < log_duration.rows(); ++i) {
    const double frames = std::exp(log_duration.value()(i, 0)) - 1.0;
    out.push_back(std::max(0, static_cast<int>(std::lround(frames))));
  }
  return out;
}

ConditionParts AssembleCondition(const Var &frame_hidden, const Var &style, const Var &p,
                                 const Var &e, const Matrix &positional) {
  const auto t = frame_hidden.rows();
  const auto d = frame_hidden.cols();
  if (p.rows() != t || e.rows() != t || p.cols() != d || e.cols() != d)
    throw std::invalid_argument("condition parts must share the frame hidden shape");
  if (style.rows() != 1 || style.cols() != d) throw std::invalid_argument("style must be 1 x d");
  if (positional.rows() != t || positional.cols() != d)
    throw std::invalid_argument("positional table shape mismatch");
  ConditionParts out;
  out.condition = ad::Add(ad::Add(ad::AddRow(frame_hidden, style), p), e);
  out.total_hidden = ad::Add(out.condition, Var(positional));
  return out;
}

}  // namespace msg
