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

#ifndef MSG_DISCRIMINATOR_H_
#define MSG_DISCRIMINATOR_H_

#include <optional>
#include <utility>
#include <vector>

#include "msg/nn.h"

namespace msg {

using ad::Var;

struct DiscriminatorConfig {
  int n_scales = 3;
  int tau = 3;
  int n_dblocks = 4;
  int channels = 128;
  int kernel = 3;
  double leaky_slope = 0.2;
  int n_mels = 80;
  int cond_dim = 64;  // must equal the generator's d_model

  void Validate() const;
};

/// Per-scale frame scores and the spectrogram-side block outputs. Entries for
/// skipped scales (pooled length 0) are left undefined and `active` is false.
struct DiscriminatorOutput {
  std::vector<Var> scores;                 // per scale, T_k x 1
  std::vector<std::vector<Var>> features;  // per scale, n_dblocks maps of T_k x channels
  std::vector<bool> active;

  int num_active() const;
};

/// Non-overlapping average pooling with kernel = stride = tau, applied `times`
/// times. Trailing frames that do not fill a window are dropped. Returns
/// nullopt when the result would have no frames (the scale is skipped).
std::optional<Var> DownsamplePool(const Var &x, int tau, int times);

/// Frame length after `times` poolings by tau.
Eigen::Index PooledLength(Eigen::Index frames, int tau, int times);

/// One Dblock: spectrogram-side and condition-side stacks of two non-strided
/// convolutions. The condition-side hidden state after its first convolution
/// is added to the spectrogram side after the spectrogram's first convolution.
struct DBlock {
  nn::ConvLayer spec_conv1, spec_conv2, cond_conv1, cond_conv2;
  nn::LayerNorm spec_norm, cond_norm;
  double slope = 0.2;

  DBlock() = default;
  DBlock(nn::ParamStore &ps, const std::string &name, int channels, int kernel, double slope, Rng &rng);
  std::pair<Var, Var> Forward(const Var &h_spec, const Var &h_cond) const;
};

/// Multi-scale frame-level conditional discriminator. Every scale has its own
/// parameters.
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig &config, uint64_t seed);

  const DiscriminatorConfig &config() const { return config_; }
  nn::ParamStore &params() { return params_; }
  const nn::ParamStore &params() const { return params_; }

  /// mel_norm: T x n_mels (normalized units); condition: T x cond_dim.
  DiscriminatorOutput Forward(const Var &mel_norm, const Var &condition) const;

  /// Direct access for ablation and tests.
  std::vector<DBlock> &blocks(int scale) { return scales_[scale].blocks; }

 private:
  struct Scale {
    nn::ConvLayer spec_in, cond_in, head;
    std::vector<DBlock> blocks;
  };
  DiscriminatorConfig config_;
  nn::ParamStore params_;
  std::vector<Scale> scales_;
};

}  // namespace msg

#endif  // MSG_DISCRIMINATOR_H_
