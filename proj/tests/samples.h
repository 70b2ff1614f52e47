// tests/samples.h

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

// Small valid instances of every file format and a corruption harness.

#ifndef DPSV_TESTS_SAMPLES_H_
#define DPSV_TESTS_SAMPLES_H_

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dpsv/io.h"

namespace dpsv::samples {

inline Matrix Gaussian(int rows, int cols, std::mt19937 &rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); i++) m.data()[i] = n(rng);
  return m;
}

inline DiagGmm SmallGmm(int components, int dim, std::mt19937 &rng) {
  Vector w = Vector::Constant(components, 1.0 / components);
  Matrix var = Gaussian(components, dim, rng).cwiseAbs().array() + 0.5;
  return DiagGmm(w, Gaussian(components, dim, rng), var);
}

inline FeatureSequence Features(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  FeatureSequence f;
  f.frames = Gaussian(rows, cols, rng).cast<float>().cast<double>();
  f.kind = cols == 120 ? FeatureKind::kFbank120 : FeatureKind::kMfcc60;
  return f;
}

inline AlignmentMatrix Posteriors(int rows, unsigned seed) {
  std::mt19937 rng(seed);
  AlignmentMatrix a;
  a.source = AlignmentSource::kDnn;
  a.posteriors = Gaussian(rows, kNumStates, rng).array().exp();
  for (int t = 0; t < rows; t++) a.posteriors.row(t) /= a.posteriors.row(t).sum();
  return a;
}

inline Pgmm SmallPgmm(unsigned seed) {
  std::mt19937 rng(seed);
  Pgmm p;
  p.states = {0, 1, 2};
  for (int s = 0; s < 3; s++) p.gmms.push_back(SmallGmm(2, 3, rng));
  p.variance_floor = Vector::Constant(3, 1e-3);
  return p;
}

inline SuffStats Stats(unsigned seed) {
  std::mt19937 rng(seed);
  Pgmm p = SmallPgmm(1);
  SuffStats s = SuffStats::Zero(p.NumMixtures(), 3);
  s.occupancy = Gaussian(p.NumMixtures(), 1, rng).col(0).cwiseAbs();
  s.first = Gaussian(p.NumMixtures(), 3, rng);
  s.second = Gaussian(p.NumMixtures(), 3, rng).cwiseAbs();
  s.background_id = p.Fingerprint();
  return s;
}

inline std::vector<IVector> Ivectors(unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<IVector> out;
  for (int i = 0; i < 3; i++) out.push_back({"utt" + std::to_string(i), Gaussian(4, 1, rng).col(0), i == 1});
  return out;
}

inline HmmSet SmallHmmSet(unsigned seed) {
  std::mt19937 rng(seed);
  HmmSet h;
  for (int s = 0; s < kNumStates; s++) h.states.push_back({SmallGmm(1 + s % 2, 2, rng), 0.5 + 0.01 * s});
  return h;
}

inline MlpModel SmallMlp(unsigned seed) {
  MlpTrainConfig cfg;
  cfg.hidden = {4};
  cfg.num_classes = 5;
  cfg.seed = seed;
  MlpModel m = InitMlp(3, cfg);
  m.input_mean = Vector::Zero(3);
  m.input_inv_std = Vector::Ones(3);
  m.log_priors = Vector::Constant(5, std::log(0.2));
  return m;
}

inline std::vector<SpeakerModel> Speakers(unsigned seed) {
  std::mt19937 rng(seed);
  Pgmm p = SmallPgmm(1);
  return {{"spk001", Gaussian(6, 3, rng), p.Fingerprint(), 5.0}, {"spk002", Gaussian(6, 3, rng), p.Fingerprint(), 5.0}};
}

inline TvModel SmallTv(unsigned seed) {
  TvTrainConfig cfg;
  cfg.rank = 2;
  cfg.seed = seed;
  return InitTv(SmallPgmm(1), cfg);
}

inline PldaBackend SmallPlda(unsigned seed) {
  std::mt19937 rng(seed);
  PldaBackend b;
  b.mean = Gaussian(4, 1, rng).col(0);
  b.lda = Gaussian(2, 4, rng);
  b.plda_mean = Gaussian(2, 1, rng).col(0);
  b.between = Matrix::Identity(2, 2) * 0.7;
  b.within = Matrix::Identity(2, 2) * 0.3;
  return b;
}

struct Format {
  std::string name;
  std::string bytes;
  std::function<std::string(const std::string &)> decode;  // decodes, then re-encodes
};

// Rows may be renormalized on read, so the decoded values are compared with
// the stored f32 rows, divided by their sums where the sum is off by more
// than 1e-5, instead of being re-encoded.
inline std::string DecodeRenormalizedPosteriors(const std::string &b) {
  AlignmentMatrix a = DecodePosteriors(b, AlignmentSource::kDnn);
  std::size_t at = 14;
  for (Eigen::Index t = 0; t < a.posteriors.rows(); t++) {
    std::vector<double> row(a.posteriors.cols());
    double sum = 0.0;
    for (double &v : row) {
      float f;
      std::memcpy(&f, b.data() + at, 4);
      at += 4;
      sum += v = f;
    }
    double scale = std::abs(sum - 1.0) > 1e-5 ? sum : 1.0;
    for (Eigen::Index s = 0; s < a.posteriors.cols(); s++)
      if (std::abs(a.posteriors(t, s) - row[s] / scale) > 1e-12) return {};
  }
  return at + 4 == b.size() ? b : std::string();
}

inline std::vector<Format> AllFormats() {
  return {
      {"DVFE", EncodeFeatures(Features(6, 60, 1)), [](const std::string &b) { return EncodeFeatures(DecodeFeatures(b)); }},
      {"DVPO", EncodePosteriors(Posteriors(5, 2)), DecodeRenormalizedPosteriors},
      {"DVST", EncodeStats(Stats(3)), [](const std::string &b) { return EncodeStats(DecodeStats(b)); }},
      {"DVIV", EncodeIvectors(Ivectors(4)), [](const std::string &b) { return EncodeIvectors(DecodeIvectors(b)); }},
      {"DVMD/HMMS", EncodeModel(SmallHmmSet(5)), [](const std::string &b) { return EncodeModel(DecodeHmmSet(b)); }},
      {"DVMD/PGMM", EncodeModel(SmallPgmm(6)), [](const std::string &b) { return EncodeModel(DecodePgmm(b)); }},
      {"DVMD/MLPM", EncodeModel(SmallMlp(7)), [](const std::string &b) { return EncodeModel(DecodeMlp(b)); }},
      {"DVMD/SPKR", EncodeModel(Speakers(8)), [](const std::string &b) { return EncodeModel(DecodeSpeakers(b)); }},
      {"DVMD/TVMD", EncodeModel(SmallTv(9)), [](const std::string &b) { return EncodeModel(DecodeTv(b)); }},
      {"DVMD/PLDA", EncodeModel(SmallPlda(10)), [](const std::string &b) { return EncodeModel(DecodePlda(b)); }},
  };
}

inline void FixCrc(std::string *bytes) {
  if (bytes->size() < 4) return;
  std::size_t body = bytes->size() - 4;
  std::uint32_t c = static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef *>(bytes->data()),
                                                     static_cast<uInt>(body)));
  for (int i = 0; i < 4; i++) (*bytes)[body + i] = static_cast<char>((c >> (8 * i)) & 0xff);
}

struct FuzzResult {
  int cases = 0;
  int positioned = 0;     // rejected with a PositionedError
  int wrong_error = 0;    // any other exception
  int accepted = 0;       // corrupted input decoded without error
  int resealed = 0;       // cases whose checksum was recomputed after mutation
  int resealed_accepted = 0;
  int reencode_mismatch = 0;  // accepted, but re-encoding does not give back the input
};

/// Truncations, byte flips and insertions; a quarter of the mutated files get
/// a valid checksum so the structural checks behind it are reached.
inline FuzzResult Fuzz(const Format &format, int cases, unsigned seed) {
  std::mt19937 rng(seed);
  FuzzResult r;
  const std::string &clean = format.bytes;
  for (int k = 0; k < cases; k++) {
    std::string b = clean;
    int kind = k % 4;
    bool reseal = false;
    if (kind == 0) {
      b.resize(std::uniform_int_distribution<std::size_t>(0, clean.size() - 1)(rng));
    } else if (kind == 1 || kind == 3) {
      int flips = std::uniform_int_distribution<int>(1, 4)(rng);
      for (int f = 0; f < flips; f++) {
        std::size_t at = std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng);
        b[at] = static_cast<char>(b[at] ^ std::uniform_int_distribution<int>(1, 255)(rng));
      }
      reseal = kind == 3 && b != clean;
    } else {
      std::size_t at = std::uniform_int_distribution<std::size_t>(0, b.size())(rng);
      int count = std::uniform_int_distribution<int>(1, 8)(rng);
      std::string extra;
      for (int i = 0; i < count; i++) extra += static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
      b.insert(at, extra);
    }
    if (b == clean) continue;
    if (reseal) FixCrc(&b);
    r.cases++;
    r.resealed += reseal;
    try {
      if (format.decode(b) != b) r.reencode_mismatch++;
      if (reseal) r.resealed_accepted++;
      else r.accepted++;
    } catch (const PositionedError &) {
      r.positioned++;
    } catch (...) {
      r.wrong_error++;
    }
  }
  return r;
}

}  // namespace dpsv::samples

#endif  // DPSV_TESTS_SAMPLES_H_
