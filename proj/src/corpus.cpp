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

#include "msg/corpus.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace msg {

namespace {

double ToF32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

bool UtteranceRecord::operator==(const UtteranceRecord &o) const {
  return phonemes == o.phonemes && speaker_id == o.speaker_id &&
         mel.rows() == o.mel.rows() && mel.cols() == o.mel.cols() && mel == o.mel &&
         targets.duration == o.targets.duration && targets.pitch == o.targets.pitch &&
         targets.energy == o.targets.energy;
}

void ValidateRecord(const UtteranceRecord &r, int vocab_size) {
  if (r.phonemes.empty()) throw std::invalid_argument("record has no phonemes");
  for (int id : r.phonemes) {
    if (id < 0 || id >= vocab_size)
      throw std::invalid_argument("phoneme id " + std::to_string(id) + " outside vocabulary");
  }
  if (r.mel.rows() < 1) throw std::invalid_argument("record has an empty mel");
  if (!r.mel.allFinite()) throw std::invalid_argument("record mel has non-finite entries");
  if (r.targets.duration.size() != r.phonemes.size())
    throw std::invalid_argument("duration count differs from phoneme count");
  long total = 0;
  for (int d : r.targets.duration) {
    if (d < 0) throw std::invalid_argument("negative duration");
    total += d;
  }
  if (total != r.mel.rows()) throw std::invalid_argument("sum of durations differs from frame count");
  if (static_cast<long>(r.targets.pitch.size()) != r.mel.rows() ||
      static_cast<long>(r.targets.energy.size()) != r.mel.rows()) {
    throw std::invalid_argument("pitch/energy length differs from frame count");
  }
}

std::vector<PhonemeTemplate> ToyInventory(int vocab_size) {
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  Rng rng(0x70F0A11ULL);  // the inventory is fixed, independent of corpus seeds
  std::vector<PhonemeTemplate> inv(vocab_size);
  for (int p = 0; p < vocab_size; ++p) {
    auto &t = inv[p];
    t.base_frames = rng.Uniform(3.0, 6.0);
    t.voiced = (p % 4) != 0;
    t.envelope.assign(kNumMels, 0.0);
    const double level = rng.Uniform(-5.0, -3.0);
    const int formants = t.voiced ? 3 : 1;
    std::vector<double> centers, widths, gains;
    for (int f = 0; f < formants; ++f) {
      centers.push_back(rng.Uniform(8.0, 70.0));
      widths.push_back(rng.Uniform(3.0, 8.0));
      gains.push_back(rng.Uniform(1.5, 3.5));
    }
    for (int b = 0; b < kNumMels; ++b) {
      double v = level;
      if (!t.voiced) v += 2.0 * double(b) / kNumMels;  // fricative-like rise
      for (int f = 0; f < formants; ++f) {
        const double z = (b - centers[f]) / widths[f];
        v += gains[f] * std::exp(-0.5 * z * z);
      }
      t.envelope[b] = v;
    }
  }
  return inv;
}

std::vector<SpeakerProfile> MakeSpeakers(int n_speakers, uint64_t seed) {
  if (n_speakers < 1) throw std::invalid_argument("n_speakers must be >= 1");
  Rng rng(DeriveSeed(seed, 7));
  std::vector<SpeakerProfile> out(n_speakers);
  for (int i = 0; i < n_speakers; ++i) {
    auto &s = out[i];
    s.speaker_id = i;
    s.f0_base = n_speakers == 1 ? 120.0 : 120.0 + 120.0 * i / (n_speakers - 1);
    s.f0_range = 0.1 * s.f0_base;
    s.rate = rng.Uniform(0.85, 1.2);
    s.energy_gain = rng.Uniform(0.7, 1.4);
    s.spectral_tilt = rng.Uniform(-3.0, 0.0);
  }
  return out;
}

UtteranceRecord SynthesizeUtterance(const SpeakerProfile &speaker,
                                    const std::vector<int> &phonemes,
                                    const std::vector<PhonemeTemplate> &inventory,
                                    double noise, Rng &rng) {
  if (phonemes.empty()) throw std::invalid_argument("empty phoneme sequence");
  if (!(speaker.f0_base > 0.0) || !(speaker.rate > 0.0) || !(speaker.energy_gain > 0.0))
    throw std::invalid_argument("invalid speaker profile");
  UtteranceRecord rec;
  rec.phonemes = phonemes;
  rec.speaker_id = speaker.speaker_id;
  int total = 0;
  for (int p : phonemes) {
    if (p < 0 || p >= static_cast<int>(inventory.size()))
      throw std::invalid_argument("phoneme id outside inventory");
    const int d = std::max(1, static_cast<int>(std::lround(inventory[p].base_frames * speaker.rate)));
    rec.targets.duration.push_back(d);
    total += d;
  }

  const MelOptions mel_opts;
  const auto centers = MelCenterFrequencies(mel_opts);
  const double phase = rng.Uniform(0.0, 2.0 * M_PI);
  const double period = rng.Uniform(18.0, 30.0);
  const double log_gain = std::log(speaker.energy_gain);
  const double tilt_scale = speaker.spectral_tilt * std::log(10.0) / 20.0;

  rec.mel.resize(total, kNumMels);
  rec.targets.pitch.assign(total, 0.0);
  int t = 0;
  for (size_t i = 0; i < phonemes.size(); ++i) {
    const auto &tmpl = inventory[phonemes[i]];
    for (int k = 0; k < rec.targets.duration[i]; ++k, ++t) {
      double f0 = 0.0;
      if (tmpl.voiced) {
        f0 = speaker.f0_base + speaker.f0_range * std::sin(2.0 * M_PI * t / period + phase);
        f0 = ToF32(f0);
      }
      rec.targets.pitch[t] = f0;
      for (int b = 0; b < kNumMels; ++b) {
        double v = tmpl.envelope[b] + log_gain + tilt_scale * std::log2(std::max(centers[b], 100.0) / 100.0);
        if (f0 > 0.0) {
          for (int h = 1; h <= 4; ++h) {
            const double z = (centers[b] - h * f0) / 40.0;
            v += (2.5 / h) * std::exp(-0.5 * z * z);
          }
        }
        v += noise * rng.Normal();
        rec.mel(t, b) = ToF32(std::max(v, kLogFloor));
      }
    }
  }
  rec.targets.energy = ExtractEnergy(rec.mel);
  for (double &e : rec.targets.energy) e = ToF32(e);
  return rec;
}

SynthCorpus GenerateSynthCorpus(const SynthConfig &config) {
  if (config.n_speakers < 1) throw std::invalid_argument("n_speakers must be >= 1");
  if (config.n_utterances < 1) throw std::invalid_argument("n_utterances must be >= 1");
  if (config.min_phonemes < 1 || config.max_phonemes < config.min_phonemes)
    throw std::invalid_argument("invalid phoneme length range");
  SynthCorpus corpus;
  corpus.speakers = MakeSpeakers(config.n_speakers, config.seed);
  const auto inventory = ToyInventory(config.vocab_size);
  Rng text_rng(DeriveSeed(config.seed, 11));
  std::vector<std::vector<int>> sentences;
  for (int i = 0; i < config.n_utterances; ++i) {
    const size_t sentence = static_cast<size_t>(i / config.n_speakers);
    if (sentence == sentences.size()) {
      const int len = config.min_phonemes +
                      static_cast<int>(text_rng.Below(config.max_phonemes - config.min_phonemes + 1));
      std::vector<int> ids(len);
      for (int &id : ids) id = static_cast<int>(text_rng.Below(config.vocab_size));
      sentences.push_back(std::move(ids));
    }
    const auto &ids = sentences[sentence];
    Rng utt_rng(DeriveSeed(config.seed, 1000 + static_cast<uint64_t>(i)));
    corpus.records.push_back(SynthesizeUtterance(corpus.speakers[i % config.n_speakers], ids,
                                                 inventory, config.noise, utt_rng));
  }
  return corpus;
}

std::vector<int> UniformDurations(int num_frames, int num_phonemes) {
  if (num_phonemes < 1) throw std::invalid_argument("need at least one phoneme");
  if (num_frames < 0) throw std::invalid_argument("negative frame count");
  std::vector<int> d(num_phonemes, num_frames / num_phonemes);
  for (int i = 0; i < num_frames % num_phonemes; ++i) ++d[i];
  return d;
}

UtteranceRecord RecordFromAudio(std::span<const double> audio, const std::vector<int> &phonemes,
                                int speaker_id, const MelOptions &mel_opts) {
  UtteranceRecord rec;
  rec.phonemes = phonemes;
  rec.speaker_id = speaker_id;
  rec.mel = ExtractMel(audio, mel_opts);
  rec.mel = rec.mel.cast<float>().cast<double>();
  F0Options f0_opts;
  f0_opts.sample_rate = mel_opts.sample_rate;
  f0_opts.hop_length = mel_opts.hop_length;
  rec.targets.pitch = ExtractF0(audio, f0_opts);
  rec.targets.energy = ExtractEnergy(rec.mel);
  for (double &v : rec.targets.pitch) v = ToF32(v);
  for (double &v : rec.targets.energy) v = ToF32(v);
  rec.targets.duration = UniformDurations(rec.num_frames(), static_cast<int>(phonemes.size()));
  return rec;
}

// ---------------------------------------------------------------------------

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * double(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - double(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ScalarStats FitScalarStats(std::span<const double> values) {
  if (values.empty()) throw DegenerateCorpusError("no values to fit statistics on");
  ScalarStats s;
  std::vector<double> v(values.begin(), values.end());
  s.p1 = Percentile(v, 1.0);
  s.p99 = Percentile(v, 99.0);
  double sum = 0.0;
  for (double &x : v) {
    x = std::clamp(x, s.p1, s.p99);
    sum += x;
  }
  s.mean = sum / double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / double(v.size()));
  if (!(s.std > 0.0) || !(s.p1 < s.p99))
    throw DegenerateCorpusError("feature has zero spread; cannot normalize");
  return s;
}

FeatureStats FitFeatureStats(std::span<const UtteranceRecord> records) {
  if (records.empty()) throw DegenerateCorpusError("empty corpus");
  std::vector<double> pitch, energy;
  Eigen::Index frames = 0;
  for (const auto &r : records) {
    for (double p : r.targets.pitch) {
      if (p > 0.0) pitch.push_back(p);
    }
    energy.insert(energy.end(), r.targets.energy.begin(), r.targets.energy.end());
    frames += r.mel.rows();
  }
  FeatureStats fs;
  fs.pitch = FitScalarStats(pitch);
  fs.energy = FitScalarStats(energy);
  fs.mel_mean = RowVector::Zero(records[0].mel.cols());
  for (const auto &r : records) fs.mel_mean += r.mel.colwise().sum();
  fs.mel_mean /= double(frames);
  RowVector var = RowVector::Zero(fs.mel_mean.cols());
  for (const auto &r : records) {
    var += (r.mel.rowwise() - fs.mel_mean).array().square().matrix().colwise().sum();
  }
  fs.mel_std = (var / double(frames)).array().sqrt().max(1e-3).matrix();
  fs.fitted = true;
  return fs;
}

int BinFromZ(double z) {
  const double scaled = (z + kZRange) / (2.0 * kZRange) * kNumBins;
  if (!(scaled > 0.0)) return 0;
  return std::min(kNumBins - 1, static_cast<int>(std::floor(scaled)));
}

double BinCenterZ(int bin) {
  return -kZRange + (bin + 0.5) * (2.0 * kZRange / kNumBins);
}

double Normalize(double value, const ScalarStats &s) {
  if (!(s.std > 0.0)) throw DegenerateCorpusError("std == 0");
  return (value - s.mean) / s.std;
}

double Denormalize(double z, const ScalarStats &s) { return s.mean + z * s.std; }

int PitchBin(double hz, const ScalarStats &s) {
  if (!(hz > 0.0)) return 0;
  return std::max(1, BinFromZ(Normalize(hz, s)));
}

double PitchTargetZ(double hz, const ScalarStats &s) {
  if (!(hz > 0.0)) return -kZRange;
  return std::clamp(Normalize(hz, s), BinCenterZ(1), kZRange);
}

double PitchHzFromBin(int bin, const ScalarStats &s) {
  if (bin <= 0) return 0.0;
  return Denormalize(BinCenterZ(bin), s);
}

int EnergyBin(double value, const ScalarStats &s) { return BinFromZ(Normalize(value, s)); }

double EnergyTargetZ(double value, const ScalarStats &s) {
  return std::clamp(Normalize(value, s), -kZRange, kZRange);
}

std::vector<int> QuantizeValues(std::span<const double> values, const ScalarStats &stats,
                                bool pitch) {
  if (!(stats.std > 0.0)) throw DegenerateCorpusError("std == 0");
  std::vector<int> bins;
  bins.reserve(values.size());
  for (double v : values) bins.push_back(pitch ? PitchBin(v, stats) : EnergyBin(v, stats));
  return bins;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kCacheMagic[4] = {'M', 'S', 'G', 'C'};
constexpr uint32_t kCacheVersion = 1;

class ByteWriter {
 public:
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void F32(double v) {
    const float f = static_cast<float>(v);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    U32(bits);
  }
  void Raw(const char *p, size_t n) { buf_.append(p, n); }
  const std::string &data() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double F32() {
    const uint32_t bits = U32();
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
  }
  void Raw(char *out, size_t n) {
    Need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  size_t remaining() const { return data_.size() - pos_; }
  void Need(size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("feature cache truncated");
  }

 private:
  std::string data_;
  size_t pos_ = 0;
};

}  // namespace

void WriteCache(const std::string &path, std::span<const UtteranceRecord> records) {
  ByteWriter w;
  w.Raw(kCacheMagic, 4);
  w.U32(kCacheVersion);
  w.U32(static_cast<uint32_t>(records.size()));
  for (const auto &r : records) {
    w.U32(static_cast<uint32_t>(r.speaker_id));
    w.U32(static_cast<uint32_t>(r.phonemes.size()));
    w.U32(static_cast<uint32_t>(r.mel.rows()));
    w.U32(static_cast<uint32_t>(r.mel.cols()));
    for (int id : r.phonemes) w.U32(static_cast<uint32_t>(id));
    if (r.targets.duration.size() != r.phonemes.size())
      throw std::invalid_argument("WriteCache: duration count differs from phoneme count");
    if (static_cast<long>(r.targets.pitch.size()) != r.mel.rows() ||
        static_cast<long>(r.targets.energy.size()) != r.mel.rows())
      throw std::invalid_argument("WriteCache: pitch/energy length differs from frame count");
    for (int d : r.targets.duration) w.U32(static_cast<uint32_t>(d));
    for (double p : r.targets.pitch) w.F32(p);
    for (double e : r.targets.energy) w.F32(e);
    for (Eigen::Index i = 0; i < r.mel.size(); ++i) w.F32(r.mel.data()[i]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write cache: " + path);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<UtteranceRecord> ReadCache(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cache: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), {});
  ByteReader r(std::move(data));
  char magic[4];
  r.Raw(magic, 4);
  if (std::memcmp(magic, kCacheMagic, 4) != 0) throw FormatError("bad cache magic in " + path);
  const uint32_t version = r.U32();
  if (version != kCacheVersion)
    throw FormatError("unsupported cache version " + std::to_string(version));
  const uint32_t count = r.U32();
  std::vector<UtteranceRecord> records;
  for (uint32_t i = 0; i < count; ++i) {
    UtteranceRecord rec;
    rec.speaker_id = static_cast<int>(r.U32());
    const uint32_t n_phon = r.U32();
    const uint32_t frames = r.U32();
    const uint32_t n_mels = r.U32();
    if (n_mels == 0 || n_mels > 4096) throw FormatError("implausible mel band count");
    // Size check before allocating anything.
    const uint64_t need = 4ull * (2ull * n_phon + 2ull * frames + uint64_t(frames) * n_mels);
    if (need > r.remaining()) throw FormatError("feature cache truncated");
    rec.phonemes.resize(n_phon);
    for (auto &id : rec.phonemes) id = static_cast<int>(r.U32());
    rec.targets.duration.resize(n_phon);
    for (auto &d : rec.targets.duration) d = static_cast<int>(r.U32());
    rec.targets.pitch.resize(frames);
    for (auto &p : rec.targets.pitch) p = r.F32();
    rec.targets.energy.resize(frames);
    for (auto &e : rec.targets.energy) e = r.F32();
    rec.mel.resize(frames, n_mels);
    for (Eigen::Index k = 0; k < rec.mel.size(); ++k) rec.mel.data()[k] = r.F32();
    records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last cache record");
  return records;
}

namespace {

nlohmann::json ScalarToJson(const ScalarStats &s) {
  return {{"mean", s.mean}, {"std", s.std}, {"p1", s.p1}, {"p99", s.p99}};
}

ScalarStats ScalarFromJson(const nlohmann::json &j) {
  ScalarStats s;
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.p1 = j.at("p1").get<double>();
  s.p99 = j.at("p99").get<double>();
  return s;
}

}  // namespace

std::string StatsToJson(const FeatureStats &stats) {
  nlohmann::json j;
  j["pitch"] = ScalarToJson(stats.pitch);
  j["energy"] = ScalarToJson(stats.energy);
  j["mel_mean"] = std::vector<double>(stats.mel_mean.data(), stats.mel_mean.data() + stats.mel_mean.size());
  j["mel_std"] = std::vector<double>(stats.mel_std.data(), stats.mel_std.data() + stats.mel_std.size());
  return j.dump(2);
}

FeatureStats StatsFromJson(const std::string &text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FeatureStats fs;
    fs.pitch = ScalarFromJson(j.at("pitch"));
    fs.energy = ScalarFromJson(j.at("energy"));
    const auto mm = j.at("mel_mean").get<std::vector<double>>();
    const auto ms = j.at("mel_std").get<std::vector<double>>();
    if (mm.size() != ms.size()) throw FormatError("mel stats size mismatch");
    fs.mel_mean = Eigen::Map<const RowVector>(mm.data(), static_cast<Eigen::Index>(mm.size()));
    fs.mel_std = Eigen::Map<const RowVector>(ms.data(), static_cast<Eigen::Index>(ms.size()));
    fs.fitted = true;
    return fs;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad stats: ") + e.what());
  }
}

void WriteStats(const std::string &path, const FeatureStats &stats) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write stats: " + path);
  out << StatsToJson(stats) << "\n";
}

FeatureStats ReadStats(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stats: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return StatsFromJson(ss.str());
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string FormatManifestLine(const ManifestEntry &e) {
  std::ostringstream os;
  os << e.id << '\t' << e.speaker_id << '\t';
  for (size_t i = 0; i < e.phonemes.size(); ++i) os << (i ? " " : "") << e.phonemes[i];
  os << '\t' << e.source;
  return os.str();
}

std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    auto fail = [&](const std::string &why) {
      throw FormatError(path + ": line " + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() != 4) fail("expected 4 tab-separated fields");
    ManifestEntry e;
    e.id = fields[0];
    if (e.id.empty()) fail("empty id");
    try {
      size_t used = 0;
      e.speaker_id = std::stoi(fields[1], &used);
      if (used != fields[1].size() || e.speaker_id < 0) fail("bad speaker id");
    } catch (const std::logic_error &) {
      fail("bad speaker id");
    }
    std::istringstream ps(fields[2]);
    std::string tok;
    while (ps >> tok) {
      try {
        size_t used = 0;
        const int id = std::stoi(tok, &used);
        if (used != tok.size() || id < 0) fail("bad phoneme id '" + tok + "'");
        e.phonemes.push_back(id);
      } catch (const std::logic_error &) {
        fail("bad phoneme id '" + tok + "'");
      }
    }
    if (e.phonemes.empty()) fail("no phonemes");
    e.source = fields[3];
    if (e.source.empty()) fail("empty source");
    out.push_back(std::move(e));
  }
  return out;
}

void WriteManifest(const std::string &path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto &e : entries) out << FormatManifestLine(e) << '\n';
}

}  // namespace msg
