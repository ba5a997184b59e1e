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

#ifndef MSG_FEATURES_H_
#define MSG_FEATURES_H_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "msg/tensor.h"

namespace msg {

/// Natural-log floor applied to mel energies; ln(1e-5).
inline const double kLogFloor = std::log(1e-5);
constexpr int kNumMels = 80;

struct MelOptions {
  int sample_rate = 22050;
  int win_length = 1024;
  int hop_length = 256;
  int n_fft = 1024;
  int n_mels = kNumMels;
  double fmin = 0.0;
  double fmax = 8000.0;
};

double HzToMel(double hz);
double MelToHz(double mel);

/// Triangular mel filterbank, n_mels x (n_fft/2 + 1), unit peak at each
/// center frequency.
Matrix MelFilterbank(const MelOptions &opts);
/// Center frequency (Hz) of every band of MelFilterbank(opts).
std::vector<double> MelCenterFrequencies(const MelOptions &opts);

/// Frame count for centered framing: floor(n / hop) + 1.
int NumFrames(size_t num_samples, int hop);

/// Log-magnitude mel spectrogram, T x n_mels, with T = floor(len/hop) + 1.
/// Throws std::invalid_argument on empty audio.
Matrix ExtractMel(std::span<const double> audio, const MelOptions &opts = {});

struct F0Options {
  int sample_rate = 22050;
  int hop_length = 256;
  int frame_length = 1024;
  double min_hz = 70.0;
  double max_hz = 400.0;
  double voicing_threshold = 0.3;
};

/// Per-frame F0 in Hz by normalized autocorrelation; 0 marks unvoiced frames.
/// Frame t is centered on sample t * hop, matching ExtractMel.
std::vector<double> ExtractF0(std::span<const double> audio, const F0Options &opts = {});

/// Per-frame log of summed linear mel energy: log(sum_b exp(mel[t][b])).
std::vector<double> ExtractEnergy(const Matrix &mel);

/// Magnitude-domain inverse of the mel filterbank followed by Griffin-Lim
/// phase reconstruction. For listening to outputs only.
std::vector<double> GriffinLim(const Matrix &mel, const MelOptions &opts, int iterations = 32);

/// Mono 16-bit PCM WAV.
struct WavData {
  int sample_rate = 0;
  std::vector<double> samples;  // in [-1, 1]
};
WavData ReadWav(const std::string &path);
void WriteWav(const std::string &path, const WavData &wav);

}  // namespace msg

#endif  // MSG_FEATURES_H_
