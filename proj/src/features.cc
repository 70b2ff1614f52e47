// src/features.cc

// Copyright 2026  The dpsv Authors

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

#include "dpsv/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numbers>

namespace dpsv {

namespace {

double HtkMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

int RoundUpToPowerOfTwo(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

void CheckAudio(const AudioClip &audio, const FeatureConfig &cfg) {
  if (audio.sample_rate != kRequiredSampleRate)
    Fail(ErrorCode::kBadSampleRate, "expected ", kRequiredSampleRate,
         " Hz, got ", audio.sample_rate);
  if (static_cast<int64_t>(audio.samples.size()) < cfg.WindowSamples())
    Fail(ErrorCode::kClipTooShort, audio.samples.size(),
         " samples is shorter than one window of ", cfg.WindowSamples());
}

// Triangular filters on the HTK mel scale spanning 0 Hz .. Nyquist.
Matrix MelBanks(int n_mels, int fft_size, int sample_rate) {
  int num_bins = fft_size / 2 + 1;
  double mel_lo = HtkMel(0.0), mel_hi = HtkMel(sample_rate / 2.0);
  double mel_step = (mel_hi - mel_lo) / (n_mels + 1);
  Matrix banks = Matrix::Zero(n_mels, num_bins);
  for (int m = 0; m < n_mels; m++) {
    double left = mel_lo + m * mel_step, center = left + mel_step,
           right = center + mel_step;
    for (int k = 0; k < num_bins; k++) {
      double mel = HtkMel(static_cast<double>(k) * sample_rate / fft_size);
      if (mel > left && mel < right) {
        banks(m, k) = mel <= center ? (mel - left) / (center - left)
                                    : (right - mel) / (right - center);
      }
    }
  }
  return banks;
}

// T x n_mels log mel energies.
Matrix LogMelEnergies(const AudioClip &audio, const FeatureConfig &cfg) {
  CheckAudio(audio, cfg);
  const int window = cfg.WindowSamples(), shift = cfg.ShiftSamples();
  const int num_frames = NumFramesFor(audio.samples.size(), cfg);
  const int fft_size = RoundUpToPowerOfTwo(window);
  const int num_bins = fft_size / 2 + 1;
  Matrix banks = MelBanks(cfg.n_mels, fft_size, audio.sample_rate);

  std::vector<double> hamming(window);
  for (int i = 0; i < window; i++)
    hamming[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (window - 1));

  double *in = fftw_alloc_real(fft_size);
  fftw_complex *out = fftw_alloc_complex(num_bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(fft_size, in, out, FFTW_ESTIMATE);

  Matrix energies(num_frames, cfg.n_mels);
  Vector power(num_bins);
  for (int t = 0; t < num_frames; t++) {
    const std::int16_t *frame = audio.samples.data() + static_cast<int64_t>(t) * shift;
    std::fill(in, in + fft_size, 0.0);
    // HTK pre-emphasis: the first sample is scaled by (1 - k).
    in[0] = frame[0] * (1.0 - cfg.preemphasis);
    for (int i = 1; i < window; i++) in[i] = frame[i] - cfg.preemphasis * frame[i - 1];
    for (int i = 0; i < window; i++) in[i] *= hamming[i];
    fftw_execute(plan);
    for (int k = 0; k < num_bins; k++) power(k) = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    Vector mel = banks * power;
    for (int m = 0; m < cfg.n_mels; m++) energies(t, m) = std::log(std::max(mel(m), 1e-10));
  }
  fftw_destroy_plan(plan);
  fftw_free(out);
  fftw_free(in);
  return energies;
}

Matrix WithDeltas(const Matrix &statics) {
  Matrix delta = ComputeDeltas(statics), delta2 = ComputeDeltas(delta);
  Matrix out(statics.rows(), statics.cols() * 3);
  out << statics, delta, delta2;
  return out;
}

}  // namespace

const char *FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kFbank120: return "FBANK120";
    case FeatureKind::kMfcc60: return "MFCC60";
    case FeatureKind::kSpliced: return "SPLICED";
  }
  return "?";
}

void FeatureConfig::Check() const {
  if (!(window_ms > shift_ms && shift_ms > 0))
    Fail(ErrorCode::kConfigInvalid, "need window_ms > shift_ms > 0");
  if (n_ceps > n_mels || n_ceps < 1)
    Fail(ErrorCode::kConfigInvalid, "need 1 <= n_ceps <= n_mels");
  if (context < 0) Fail(ErrorCode::kConfigInvalid, "negative context");
}

int FeatureConfig::WindowSamples() const {
  return static_cast<int>(std::lround(window_ms * kRequiredSampleRate / 1000.0));
}

int FeatureConfig::ShiftSamples() const {
  return static_cast<int>(std::lround(shift_ms * kRequiredSampleRate / 1000.0));
}

int NumFramesFor(std::int64_t num_samples, const FeatureConfig &cfg) {
  const int window = cfg.WindowSamples();
  if (num_samples < window) return 0;
  return static_cast<int>((num_samples - window) / cfg.ShiftSamples() + 1);
}

Vector Dct2(const Vector &log_energies, int num_ceps) {
  const int n = static_cast<int>(log_energies.size());
  Vector ceps(num_ceps);
  for (int i = 0; i < num_ceps; i++) {
    double sum = 0.0;
    for (int j = 0; j < n; j++)
      sum += log_energies(j) * std::cos(std::numbers::pi * i * (j + 0.5) / n);
    ceps(i) = sum * std::sqrt((i == 0 ? 1.0 : 2.0) / n);
  }
  return ceps;
}

Matrix ComputeDeltas(const Matrix &frames, int window) {
  const int num_frames = static_cast<int>(frames.rows());
  double denom = 0.0;
  for (int k = 1; k <= window; k++) denom += 2.0 * k * k;
  Matrix deltas = Matrix::Zero(frames.rows(), frames.cols());
  for (int t = 0; t < num_frames; t++) {
    for (int k = 1; k <= window; k++) {
      int ahead = std::min(t + k, num_frames - 1), behind = std::max(t - k, 0);
      deltas.row(t) += k * (frames.row(ahead) - frames.row(behind));
    }
  }
  return deltas / denom;
}

FeatureSequence ExtractFbank(const AudioClip &audio, const FeatureConfig &cfg) {
  cfg.Check();
  FeatureSequence out;
  out.frames = WithDeltas(LogMelEnergies(audio, cfg));
  out.frame_shift_ms = cfg.shift_ms;
  out.kind = FeatureKind::kFbank120;
  return out;
}

FeatureSequence ExtractMfcc(const AudioClip &audio, const FeatureConfig &cfg) {
  cfg.Check();
  Matrix energies = LogMelEnergies(audio, cfg);
  Matrix ceps(energies.rows(), cfg.n_ceps);
  for (Eigen::Index t = 0; t < energies.rows(); t++)
    ceps.row(t) = Dct2(energies.row(t).transpose(), cfg.n_ceps).transpose();
  FeatureSequence out;
  out.frames = WithDeltas(ceps);
  out.frame_shift_ms = cfg.shift_ms;
  out.kind = FeatureKind::kMfcc60;
  return out;
}

FeatureSequence ApplyCmvn(const FeatureSequence &feats) {
  const int num_frames = feats.NumFrames();
  if (num_frames < 2) Fail(ErrorCode::kTooFewFrames, "CMVN needs at least 2 frames, got ", num_frames);
  FeatureSequence out = feats;
  Eigen::RowVectorXd mean = feats.frames.colwise().mean();
  out.frames.rowwise() -= mean;
  for (int d = 0; d < feats.Dim(); d++) {
    double var = out.frames.col(d).squaredNorm() / num_frames;
    // Relative test: a constant column leaves only rounding noise after
    // mean removal.
    double scale = std::max(1.0, std::abs(mean(d)));
    if (var <= 1e-24 * scale * scale) {
      out.frames.col(d).setZero();
    } else {
      out.frames.col(d) /= std::sqrt(var);
    }
  }
  return out;
}

FeatureSequence Splice(const FeatureSequence &feats, int context) {
  if (feats.kind != FeatureKind::kFbank120)
    Fail(ErrorCode::kWrongKind, "splice expects FBANK120, got ", FeatureKindName(feats.kind));
  if (context < 0) Fail(ErrorCode::kConfigInvalid, "negative context");
  if (context == 0) return feats;
  const int num_frames = feats.NumFrames(), dim = feats.Dim(), width = 2 * context + 1;
  FeatureSequence out;
  out.frames.resize(num_frames, static_cast<Eigen::Index>(dim) * width);
  for (int t = 0; t < num_frames; t++) {
    for (int k = -context; k <= context; k++) {
      int src = std::clamp(t + k, 0, num_frames - 1);
      out.frames.block(t, static_cast<Eigen::Index>(k + context) * dim, 1, dim) = feats.frames.row(src);
    }
  }
  out.frame_shift_ms = feats.frame_shift_ms;
  out.kind = FeatureKind::kSpliced;
  return out;
}

namespace {

template <typename T>
T ReadLe(const std::string &buf, size_t pos) {
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

}  // namespace

AudioClip ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorCode::kIoError, "cannot open ", path);
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0)
    Fail(ErrorCode::kBadMagic, path, " is not a RIFF/WAVE file");
  size_t pos = 12;
  int channels = 0, bits = 0, format = 0;
  AudioClip clip;
  clip.sample_rate = 0;
  bool have_data = false;
  while (pos + 8 <= buf.size()) {
    std::string id = buf.substr(pos, 4);
    uint32_t size = ReadLe<uint32_t>(buf, pos + 4);
    pos += 8;
    if (pos + size > buf.size()) Fail(ErrorCode::kTruncated, path, ": chunk ", id, " runs past end of file");
    if (id == "fmt ") {
      if (size < 16) Fail(ErrorCode::kParseError, path, ": short fmt chunk");
      format = ReadLe<uint16_t>(buf, pos);
      channels = ReadLe<uint16_t>(buf, pos + 2);
      clip.sample_rate = static_cast<int>(ReadLe<uint32_t>(buf, pos + 4));
      bits = ReadLe<uint16_t>(buf, pos + 14);
    } else if (id == "data") {
      if (format != 1 || channels != 1 || bits != 16)
        Fail(ErrorCode::kParseError, path, ": only mono PCM16 is supported");
      clip.samples.resize(size / 2);
      std::memcpy(clip.samples.data(), buf.data() + pos, clip.samples.size() * 2);
      have_data = true;
      break;
    }
    pos += size + (size & 1);
  }
  if (!have_data) Fail(ErrorCode::kParseError, path, ": no data chunk");
  if (clip.sample_rate != kRequiredSampleRate)
    Fail(ErrorCode::kBadSampleRate, path, ": ", clip.sample_rate, " Hz");
  return clip;
}

void WriteWav(const AudioClip &audio, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) Fail(ErrorCode::kIoError, "cannot write ", path);
  auto put32 = [&](uint32_t v) { os.write(reinterpret_cast<const char *>(&v), 4); };
  auto put16 = [&](uint16_t v) { os.write(reinterpret_cast<const char *>(&v), 2); };
  uint32_t data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
  os.write("RIFF", 4);
  put32(36 + data_bytes);
  os.write("WAVEfmt ", 8);
  put32(16);
  put16(1);
  put16(1);
  put32(static_cast<uint32_t>(audio.sample_rate));
  put32(static_cast<uint32_t>(audio.sample_rate * 2));
  put16(2);
  put16(16);
  os.write("data", 4);
  put32(data_bytes);
  os.write(reinterpret_cast<const char *>(audio.samples.data()), data_bytes);
}

}  // namespace dpsv
