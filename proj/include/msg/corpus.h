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

#ifndef MSG_CORPUS_H_
#define MSG_CORPUS_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msg/features.h"
#include "msg/rng.h"
#include "msg/tensor.h"

namespace msg {

/// Thrown for malformed cache/manifest/checkpoint files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when corpus statistics cannot be fitted (zero spread).
class DegenerateCorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpeakerProfile {
  int speaker_id = 0;
  double f0_base = 120.0;      // Hz
  double f0_range = 20.0;      // Hz
  double rate = 1.0;           // duration multiplier
  double energy_gain = 1.0;
  double spectral_tilt = 0.0;  // dB per octave
};

struct VarianceTargets {
  std::vector<int> duration;   // frames per phoneme
  std::vector<double> pitch;   // Hz per frame, 0 = unvoiced
  std::vector<double> energy;  // per frame
};

struct UtteranceRecord {
  std::vector<int> phonemes;
  Matrix mel;  // T x n_mels, natural-log magnitudes
  VarianceTargets targets;
  int speaker_id = 0;

  int num_frames() const { return static_cast<int>(mel.rows()); }
  bool operator==(const UtteranceRecord &o) const;
};

/// Checks the record's internal consistency; throws std::invalid_argument.
void ValidateRecord(const UtteranceRecord &r, int vocab_size);

/// Fixed toy phoneme inventory: every phoneme has a nominal length, a voicing
/// flag and a spectral envelope.
struct PhonemeTemplate {
  double base_frames = 4.0;
  bool voiced = true;
  std::vector<double> envelope;  // n_mels log-levels
};

struct SynthConfig {
  int n_speakers = 2;
  int n_utterances = 8;
  int vocab_size = 16;
  int min_phonemes = 4;
  int max_phonemes = 8;
  double noise = 0.05;  // per-bin log-domain jitter
  uint64_t seed = 0;
};

struct SynthCorpus {
  std::vector<UtteranceRecord> records;
  std::vector<SpeakerProfile> speakers;
};

std::vector<PhonemeTemplate> ToyInventory(int vocab_size);

/// Speaker profiles; f0_base is spread evenly over [120, 240] Hz so that any
/// two-speaker corpus contains a 120 Hz and a 240 Hz voice.
std::vector<SpeakerProfile> MakeSpeakers(int n_speakers, uint64_t seed);

/// Renders one utterance. Durations are round(base_frames * rate) (at least 1),
/// pitch follows the speaker contour on voiced phonemes and the energy target
/// is computed from the rendered mel. All values are representable as f32.
UtteranceRecord SynthesizeUtterance(const SpeakerProfile &speaker,
                                    const std::vector<int> &phonemes,
                                    const std::vector<PhonemeTemplate> &inventory,
                                    double noise, Rng &rng);

/// Deterministic in (config, seed). Utterance i belongs to speaker
/// i % n_speakers and reads sentence i / n_speakers, so every sentence is
/// spoken by each speaker in turn.
SynthCorpus GenerateSynthCorpus(const SynthConfig &config);

/// Real-audio stand-in for teacher durations: T split evenly, remainder to
/// the earliest phonemes.
std::vector<int> UniformDurations(int num_frames, int num_phonemes);

/// Builds a record from audio: mel, autocorrelation F0, energy, uniform durations.
UtteranceRecord RecordFromAudio(std::span<const double> audio, const std::vector<int> &phonemes,
                                int speaker_id, const MelOptions &mel_opts = {});

// ---------------------------------------------------------------------------
// Statistics and quantization.

/// Mean/std are fitted after clipping to the 1st/99th percentiles.
struct ScalarStats {
  double mean = 0.0;
  double std = 1.0;
  double p1 = 0.0;
  double p99 = 0.0;
};

struct FeatureStats {
  ScalarStats pitch;   // voiced frames only
  ScalarStats energy;
  RowVector mel_mean;  // per band
  RowVector mel_std;
  bool fitted = false;
};

/// Linear-interpolated percentile, q in [0, 100].
double Percentile(std::vector<double> values, double q);
ScalarStats FitScalarStats(std::span<const double> values);
FeatureStats FitFeatureStats(std::span<const UtteranceRecord> records);

constexpr int kNumBins = 256;
constexpr double kZRange = 3.0;

/// z-scores map [-3, 3] linearly onto bins 0..255 with clamping; z = 0 is bin 128.
int BinFromZ(double z);
/// Center of a bin in z units.
double BinCenterZ(int bin);

double Normalize(double value, const ScalarStats &s);
double Denormalize(double z, const ScalarStats &s);

/// Pitch quantizer. 0 Hz (unvoiced) is bin 0; voiced frames use bins 1..255.
int PitchBin(double hz, const ScalarStats &s);
/// z used as the pitch predictor's target: unvoiced -> -3, voiced clamped to
/// the voiced part of the bin range.
double PitchTargetZ(double hz, const ScalarStats &s);
/// Hz at a bin center; 0 for bin 0.
double PitchHzFromBin(int bin, const ScalarStats &s);

int EnergyBin(double value, const ScalarStats &s);
double EnergyTargetZ(double value, const ScalarStats &s);

/// Quantizes an array with the given stats. Throws DegenerateCorpusError when
/// stats.std == 0.
std::vector<int> QuantizeValues(std::span<const double> values, const ScalarStats &stats,
                                bool pitch);

// ---------------------------------------------------------------------------
// Feature cache ("MSGC") and manifest.

void WriteCache(const std::string &path, std::span<const UtteranceRecord> records);
/// Throws FormatError on bad magic, version, shape header or truncation.
std::vector<UtteranceRecord> ReadCache(const std::string &path);

std::string StatsToJson(const FeatureStats &stats);
/// Throws FormatError.
FeatureStats StatsFromJson(const std::string &text);
void WriteStats(const std::string &path, const FeatureStats &stats);
FeatureStats ReadStats(const std::string &path);

struct ManifestEntry {
  std::string id;
  int speaker_id = 0;
  std::vector<int> phonemes;
  std::string source;  // wav path or "synthetic"
};

std::string FormatManifestLine(const ManifestEntry &e);
/// Throws FormatError naming the 1-based line number.
std::vector<ManifestEntry> ReadManifest(const std::string &path);
void WriteManifest(const std::string &path, std::span<const ManifestEntry> entries);

}  // namespace msg

#endif  // MSG_CORPUS_H_
