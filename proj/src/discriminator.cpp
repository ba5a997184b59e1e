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

#include "msg/discriminator.h"

#include <stdexcept>

#include "msg/log.h"

namespace msg {

void DiscriminatorConfig::Validate() const {
  if (n_scales != 3) throw std::invalid_argument("the discriminator has exactly 3 scales");
  if (n_dblocks != 4) throw std::invalid_argument("each scale has exactly 4 Dblocks");
  if (tau < 2) throw std::invalid_argument("tau must be >= 2");
  if (channels < 1 || n_mels < 1 || cond_dim < 1) throw std::invalid_argument("sizes must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("kernel must be odd");
}

int DiscriminatorOutput::num_active() const {
  int n = 0;
  for (bool a : active) n += a ? 1 : 0;
  return n;
}

Eigen::Index PooledLength(Eigen::Index frames, int tau, int times) {
  for (int i = 0; i < times; ++i) frames /= tau;
  return frames;
}

std::optional<Var> DownsamplePool(const Var &x, int tau, int times) {
  if (tau < 2) throw std::invalid_argument("pooling factor must be >= 2");
  if (times < 0) throw std::invalid_argument("negative pooling count");
  if (PooledLength(x.rows(), tau, times) == 0) return std::nullopt;
  Var out = x;
  for (int i = 0; i < times; ++i) out = ad::AvgPoolRows(out, tau);
  return out;
}

DBlock::DBlock(nn::ParamStore &ps, const std::string &name, int channels, int kernel,
               double slope_, Rng &rng)
    : spec_conv1(ps, name + ".spec_conv1", channels, channels, kernel, 1, rng),
      spec_conv2(ps, name + ".spec_conv2", channels, channels, kernel, 1, rng),
      cond_conv1(ps, name + ".cond_conv1", channels, channels, kernel, 1, rng),
      cond_conv2(ps, name + ".cond_conv2", channels, channels, kernel, 1, rng),
      spec_norm(ps, name + ".spec_norm", channels),
      cond_norm(ps, name + ".cond_norm", channels),
      slope(slope_) {}

std::pair<Var, Var> DBlock::Forward(const Var &h_spec, const Var &h_cond) const {
  if (h_spec.rows() != h_cond.rows())
    throw std::invalid_argument("Dblock: spectrogram and condition lengths differ");
  Var cond_hidden = ad::LeakyRelu(cond_conv1(h_cond), slope);
  Var spec_hidden = ad::LeakyRelu(ad::Add(spec_conv1(h_spec), cond_hidden), slope);
  Var spec_out = spec_norm(ad::Add(h_spec, spec_conv2(spec_hidden)));
  Var cond_out = cond_norm(ad::Add(h_cond, cond_conv2(cond_hidden)));
  return {spec_out, cond_out};
}

Discriminator::Discriminator(const DiscriminatorConfig &config, uint64_t seed) : config_(config) {
  config_.Validate();
  Rng rng(DeriveSeed(seed, 202));
  for (int k = 0; k < config_.n_scales; ++k) {
    const std::string prefix = "scale" + std::to_string(k);
    Scale s;
    s.spec_in = nn::ConvLayer(params_, prefix + ".spec_in", config_.n_mels, config_.channels, 1, 1, rng);
    s.cond_in = nn::ConvLayer(params_, prefix + ".cond_in", config_.cond_dim, config_.channels, 1, 1, rng);
    for (int i = 0; i < config_.n_dblocks; ++i) {
      s.blocks.emplace_back(params_, prefix + ".dblock" + std::to_string(i), config_.channels,
                            config_.kernel, config_.leaky_slope, rng);
    }
    s.head = nn::ConvLayer(params_, prefix + ".head", config_.channels, 1, 1, 1, rng);
    scales_.push_back(std::move(s));
  }
}

DiscriminatorOutput Discriminator::Forward(const Var &mel_norm, const Var &condition) const {
  if (mel_norm.rows() != condition.rows())
    throw std::invalid_argument("condition length differs from mel length");
  if (mel_norm.cols() != config_.n_mels || condition.cols() != config_.cond_dim)
    throw std::invalid_argument("discriminator input width mismatch");
  DiscriminatorOutput out;
  out.scores.resize(config_.n_scales);
  out.features.resize(config_.n_scales);
  out.active.assign(config_.n_scales, false);
  for (int k = 0; k < config_.n_scales; ++k) {
    auto mel = DownsamplePool(mel_norm, config_.tau, k);
    auto cond = DownsamplePool(condition, config_.tau, k);
    if (!mel || !cond) {
      MSG_WARN << "discriminator scale " << k + 1 << " skipped: " << mel_norm.rows()
               << " frames is too short for tau=" << config_.tau;
      continue;
    }
    const Scale &s = scales_[k];
    Var h_spec = s.spec_in(*mel);
    Var h_cond = s.cond_in(*cond);
    for (const auto &block : s.blocks) {
      auto [spec, c] = block.Forward(h_spec, h_cond);
      h_spec = spec;
      h_cond = c;
      out.features[k].push_back(h_spec);
    }
    out.scores[k] = s.head(h_spec);
    out.active[k] = true;
  }
  return out;
}

}  // namespace msg
