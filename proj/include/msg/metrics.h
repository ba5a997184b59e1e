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

#ifndef MSG_METRICS_H_
#define MSG_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include "msg/corpus.h"
#include "msg/generator.h"

namespace msg {

constexpr int kMcdOrder = 13;

/// Orthonormal DCT-II of one frame, all coefficients.
std::vector<double> FrameCepstrum(std::span<const double> log_mel);

/// Mean over frames of (10 / ln 10) * sqrt(2 * sum_{d=1..13} (c_d - c'_d)^2),
/// with c the orthonormal DCT-II of each natural-log mel frame. Throws
/// std::invalid_argument on a shape mismatch.
double Mcd13(const Matrix &mel_ref, const Matrix &mel_gen);

/// Root mean squared difference over frames voiced (> 0 Hz) in both
/// contours; 0 when no frame is voiced in both.
double F0Rmse(std::span<const double> f0_ref, std::span<const double> f0_gen);

/// Utterance summary used for speaker classification: mean voiced F0, mean
/// energy, then the mean mel vector.
std::vector<double> SpeakerFeatures(const UtteranceRecord &r);

/// Assigns each generated record to the speaker whose reference centroid is
/// nearest in z-scored feature space (ties go to the lower speaker id) and
/// returns the fraction assigned to their own speaker_id. Mean F0, mean
/// energy and the whole mel block carry equal weight in the distance.
double SpeakerTop1(std::span<const UtteranceRecord> generated,
                   std::span<const UtteranceRecord> reference);

struct MetricReport {
  double mcd13 = 0.0;         // dB
  double f0_rmse = 0.0;       // Hz
  double speaker_top1 = 0.0;  // fraction
  int n_utterances = 0;

  std::string ToCsv() const;
  std::string ToTable() const;
};

/// Metrics between aligned reference and generated records (same order and
/// frame counts). MCD and F0 RMSE are averaged over utterances.
MetricReport EvaluatePairs(std::span<const UtteranceRecord> references,
                           std::span<const UtteranceRecord> generated,
                           std::span<const UtteranceRecord> speaker_reference);

/// Synthesizes each record from its own mel as style reference with its
/// ground-truth durations. The generated pitch and energy are the dequantized
/// predictions.
UtteranceRecord SynthesizeRecord(const Generator &generator, const UtteranceRecord &reference);

MetricReport EvaluateGenerator(const Generator &generator, std::span<const UtteranceRecord> eval,
                               std::span<const UtteranceRecord> speaker_reference);

}  // namespace msg

#endif  // MSG_METRICS_H_
