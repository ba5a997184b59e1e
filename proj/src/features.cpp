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

#include "msg/features.h"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace msg {

namespace {

std::vector<double> HannWindow(int length) {
  std::vector<double> w(length);
  for (int i = 0; i < length; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / length);
  return w;
}

// Window of win_length centered inside n_fft points.
std::vector<double> PaddedWindow(const MelOptions &opts) {
  std::vector<double> w(opts.n_fft, 0.0);
  const auto hann = HannWindow(opts.win_length);
  const int offset = (opts.n_fft - opts.win_length) / 2;
  for (int i = 0; i < opts.win_length; ++i) w[offset + i] = hann[i];
  return w;
}

// Centered padding by n_fft/2 on both sides. Reflection when the signal is
// long enough, zeros otherwise.
std::vector<double> CenterPad(std::span<const double> x, int pad) {
  const long n = static_cast<long>(x.size());
  std::vector<double> out(x.size() + 2 * pad, 0.0);
  std::copy(x.begin(), x.end(), out.begin() + pad);
  if (n > pad) {
    for (int i = 0; i < pad; ++i) {
      out[pad - 1 - i] = x[i + 1];
      out[pad + n + i] = x[n - 2 - i];
    }
  }
  return out;
}

void ValidateMelOptions(const MelOptions &o) {
  if (o.sample_rate <= 0 || o.hop_length <= 0 || o.n_fft <= 0 || o.n_mels <= 0 ||
      o.win_length <= 0 || o.win_length > o.n_fft) {
    throw std::invalid_argument("invalid mel options");
  }
  if (!(o.fmax > o.fmin) || o.fmax > o.sample_rate / 2.0)
    throw std::invalid_argument("mel options: need fmin < fmax <= sr/2");
}

Matrix MagnitudeFrames(std::span<const double> audio, const MelOptions &opts) {
  const int pad = opts.n_fft / 2;
  const auto padded = CenterPad(audio, pad);
  const int frames = NumFrames(audio.size(), opts.hop_length);
  const auto window = PaddedWindow(opts);
  const int bins = opts.n_fft / 2 + 1;
  Matrix mag(frames, bins);
  Eigen::FFT<double> fft;
  std::vector<double> buf(opts.n_fft);
  std::vector<std::complex<double>> spec;
  for (int t = 0; t < frames; ++t) {
    const size_t start = static_cast<size_t>(t) * opts.hop_length;
    for (int i = 0; i < opts.n_fft; ++i) {
      const size_t idx = start + i;
      buf[i] = (idx < padded.size() ? padded[idx] : 0.0) * window[i];
    }
    fft.fwd(spec, buf);
    for (int k = 0; k < bins; ++k) mag(t, k) = std::abs(spec[k]);
  }
  return mag;
}

}  // namespace

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelCenterFrequencies(const MelOptions &opts) {
  const double lo = HzToMel(opts.fmin);
  const double hi = HzToMel(opts.fmax);
  std::vector<double> centers(opts.n_mels);
  for (int m = 0; m < opts.n_mels; ++m) {
    centers[m] = MelToHz(lo + (hi - lo) * (m + 1) / (opts.n_mels + 1));
  }
  return centers;
}

Matrix MelFilterbank(const MelOptions &opts) {
  ValidateMelOptions(opts);
  const int bins = opts.n_fft / 2 + 1;
  const double lo = HzToMel(opts.fmin);
  const double hi = HzToMel(opts.fmax);
  std::vector<double> edges(opts.n_mels + 2);
  for (int m = 0; m < opts.n_mels + 2; ++m) {
    edges[m] = MelToHz(lo + (hi - lo) * m / (opts.n_mels + 1));
  }
  Matrix fb = Matrix::Zero(opts.n_mels, bins);
  for (int m = 0; m < opts.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = double(k) * opts.sample_rate / opts.n_fft;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb(m, k) = w;
    }
  }
  return fb;
}

int NumFrames(size_t num_samples, int hop) {
  return static_cast<int>(num_samples / static_cast<size_t>(hop)) + 1;
}

Matrix ExtractMel(std::span<const double> audio, const MelOptions &opts) {
  if (audio.empty()) throw std::invalid_argument("ExtractMel: empty audio");
  ValidateMelOptions(opts);
  const Matrix mag = MagnitudeFrames(audio, opts);
  const Matrix fb = MelFilterbank(opts);
  Matrix mel = mag * fb.transpose();
  const double floor_lin = std::exp(kLogFloor);
  for (Eigen::Index i = 0; i < mel.size(); ++i) {
    const double v = mel.data()[i];
    mel.data()[i] = v > floor_lin ? std::log(v) : kLogFloor;
  }
  return mel;
}

std::vector<double> ExtractF0(std::span<const double> audio, const F0Options &opts) {
  if (audio.empty()) throw std::invalid_argument("ExtractF0: empty audio");
  if (opts.hop_length <= 0 || opts.frame_length <= 0 || opts.min_hz <= 0 ||
      opts.max_hz <= opts.min_hz) {
    throw std::invalid_argument("ExtractF0: invalid options");
  }
  const int frames = NumFrames(audio.size(), opts.hop_length);
  const int min_lag = std::max(1, static_cast<int>(std::floor(opts.sample_rate / opts.max_hz)));
  const int max_lag = static_cast<int>(std::ceil(opts.sample_rate / opts.min_hz));
  const int len = opts.frame_length;
  if (max_lag + 2 >= len) throw std::invalid_argument("ExtractF0: frame too short for min_hz");

  std::vector<double> f0(frames, 0.0);
  std::vector<double> buf(len);
  std::vector<double> r(max_lag + 2, 0.0);
  for (int t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * opts.hop_length - len / 2;
    double energy = 0.0;
    for (int i = 0; i < len; ++i) {
      const long idx = start + i;
      buf[i] = (idx >= 0 && idx < static_cast<long>(audio.size())) ? audio[idx] : 0.0;
      energy += buf[i] * buf[i];
    }
    if (energy <= 1e-10) continue;

    double best = -1.0;
    for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      for (int i = 0; i + lag < len; ++i) {
        num += buf[i] * buf[i + lag];
        e0 += buf[i] * buf[i];
        e1 += buf[i + lag] * buf[i + lag];
      }
      const double den = std::sqrt(e0 * e1);
      r[lag] = den > 0.0 ? num / den : 0.0;
      if (lag >= min_lag && lag <= max_lag) best = std::max(best, r[lag]);
    }
    if (best < opts.voicing_threshold) continue;

    // Shortest lag whose local peak is close to the best one; avoids
    // picking a multiple of the true period.
    int pick = -1;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.9 * best) {
        pick = lag;
        break;
      }
    }
    if (pick < 0) continue;
    double offset = 0.0;
    const double denom = r[pick - 1] - 2.0 * r[pick] + r[pick + 1];
    if (std::abs(denom) > 1e-12) offset = 0.5 * (r[pick - 1] - r[pick + 1]) / denom;
    offset = std::clamp(offset, -0.5, 0.5);
    f0[t] = opts.sample_rate / (pick + offset);
  }
  return f0;
}

std::vector<double> ExtractEnergy(const Matrix &mel) {
  std::vector<double> energy(static_cast<size_t>(mel.rows()));
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    const double m = mel.row(t).maxCoeff();
    energy[t] = m + std::log((mel.row(t).array() - m).exp().sum());
  }
  return energy;
}

std::vector<double> GriffinLim(const Matrix &mel, const MelOptions &opts, int iterations) {
  ValidateMelOptions(opts);
  if (mel.cols() != opts.n_mels) throw std::invalid_argument("GriffinLim: band count mismatch");
  const Matrix fb = MelFilterbank(opts);
  const Matrix pinv = fb.completeOrthogonalDecomposition().pseudoInverse();
  Matrix mag = (mel.array().exp().matrix() * pinv.transpose()).cwiseMax(0.0);

  const int frames = static_cast<int>(mel.rows());
  const int bins = opts.n_fft / 2 + 1;
  const int pad = opts.n_fft / 2;
  const size_t length = static_cast<size_t>(frames - 1) * opts.hop_length;
  const auto window = PaddedWindow(opts);
  Eigen::FFT<double> fft;

  std::vector<std::vector<std::complex<double>>> spec(frames);
  for (int t = 0; t < frames; ++t) {
    spec[t].assign(opts.n_fft, {0.0, 0.0});
    for (int k = 0; k < bins; ++k) spec[t][k] = {mag(t, k), 0.0};
  }

  std::vector<double> signal;
  auto istft = [&]() {
    std::vector<double> acc(length + 2 * pad, 0.0), norm(length + 2 * pad, 0.0);
    std::vector<double> frame;
    for (int t = 0; t < frames; ++t) {
      auto full = spec[t];
      for (int k = 1; k < bins - 1; ++k) full[opts.n_fft - k] = std::conj(full[k]);
      fft.inv(frame, full);
      const size_t start = static_cast<size_t>(t) * opts.hop_length;
      for (int i = 0; i < opts.n_fft; ++i) {
        acc[start + i] += frame[i] * window[i];
        norm[start + i] += window[i] * window[i];
      }
    }
    signal.assign(length, 0.0);
    for (size_t i = 0; i < length; ++i) {
      const double n = norm[i + pad];
      signal[i] = n > 1e-8 ? acc[i + pad] / n : 0.0;
    }
  };

  for (int it = 0; it < iterations; ++it) {
    istft();
    const auto padded = CenterPad(signal, pad);
    std::vector<double> buf(opts.n_fft);
    std::vector<std::complex<double>> s;
    for (int t = 0; t < frames; ++t) {
      const size_t start = static_cast<size_t>(t) * opts.hop_length;
      for (int i = 0; i < opts.n_fft; ++i) {
        const size_t idx = start + i;
        buf[i] = (idx < padded.size() ? padded[idx] : 0.0) * window[i];
      }
      fft.fwd(s, buf);
      for (int k = 0; k < bins; ++k) {
        const double a = std::abs(s[k]);
        const std::complex<double> phase = a > 1e-12 ? s[k] / a : std::complex<double>(1.0, 0.0);
        spec[t][k] = mag(t, k) * phase;
      }
    }
  }
  istft();
  return signal;
}

namespace {

uint32_t ReadU32(const unsigned char *p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}
uint16_t ReadU16(const unsigned char *p) { return uint16_t(p[0] | (p[1] << 8)); }

void PutU32(std::ostream &os, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char *>(b), 4);
}
void PutU16(std::ostream &os, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char *>(b), 2);
}

}  // namespace

WavData ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  }
  int channels = 0, bits = 0;
  WavData wav;
  size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const uint32_t size = ReadU32(bytes.data() + pos + 4);
    const unsigned char *body = bytes.data() + pos + 8;
    if (pos + 8 + size > bytes.size()) throw std::runtime_error("truncated wav chunk: " + path);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("bad fmt chunk: " + path);
      if (ReadU16(body) != 1) throw std::runtime_error("only PCM wav is supported: " + path);
      channels = ReadU16(body + 2);
      wav.sample_rate = static_cast<int>(ReadU32(body + 4));
      bits = ReadU16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt || bits != 16 || channels < 1)
        throw std::runtime_error("only 16-bit PCM wav is supported: " + path);
      const size_t frames = size / (2u * channels);
      wav.samples.resize(frames);
      for (size_t i = 0; i < frames; ++i) {
        const auto s = static_cast<int16_t>(ReadU16(body + 2 * channels * i));
        wav.samples[i] = s / 32768.0;
      }
      return wav;
    }
    pos += 8 + size + (size & 1);
  }
  throw std::runtime_error("wav file has no data chunk: " + path);
}

void WriteWav(const std::string &path, const WavData &wav) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write wav file: " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(wav.samples.size() * 2);
  out.write("RIFF", 4);
  PutU32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(wav.sample_rate));
  PutU32(out, static_cast<uint32_t>(wav.sample_rate * 2));
  PutU16(out, 2);
  PutU16(out, 16);
  out.write("data", 4);
  PutU32(out, data_bytes);
  for (double s : wav.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(std::lround(c * 32767.0))));
  }
}

}  // namespace msg
