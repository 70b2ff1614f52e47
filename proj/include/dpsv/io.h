// dpsv/io.h

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

#ifndef DPSV_IO_H_
#define DPSV_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpsv/alignment.h"
#include "dpsv/features.h"
#include "dpsv/hmm.h"
#include "dpsv/ivector.h"
#include "dpsv/map-speaker.h"
#include "dpsv/mlp.h"
#include "dpsv/pgmm.h"

namespace dpsv {

// Every file starts with a 4-byte magic and a u16 version and ends with the
// CRC-32 of all preceding bytes. Integers are little-endian.
//
//   DVFE  rows u32, cols u32, rows*cols f32 (row-major)
//   DVPO  same layout; rows sum to 1 within 1e-3
//   DVST  mixtures u32, dim u32, per mixture N f64, F f64*dim, S f64*dim,
//         then the background fingerprint (u16 length + bytes)
//   DVIV  count u32, dim u32, per entry id (u16 length + bytes),
//         normalized u8, dim f64
//   DVMD  kind tag (4 bytes), payload length u64, payload
inline constexpr std::uint16_t kFormatVersion = 1;

enum class ModelKind { kHmmSet, kPgmm, kMlp, kSpeakers, kTv, kPlda };

const char *ModelKindTag(ModelKind kind);

std::string EncodeFeatures(const FeatureSequence &feats);
FeatureSequence DecodeFeatures(const std::string &bytes);

std::string EncodePosteriors(const AlignmentMatrix &align);
/// Rows missing 1 by more than 1e-3 (or with negative entries) are
/// rejected; rows off by more than 1e-5 are renormalized.
AlignmentMatrix DecodePosteriors(const std::string &bytes, AlignmentSource source);

std::string EncodeStats(const SuffStats &stats);
SuffStats DecodeStats(const std::string &bytes);

std::string EncodeIvectors(const std::vector<IVector> &ivectors);
std::vector<IVector> DecodeIvectors(const std::string &bytes);

std::string EncodeModel(const HmmSet &hmms);
std::string EncodeModel(const Pgmm &pgmm);
std::string EncodeModel(const MlpModel &mlp);
std::string EncodeModel(const std::vector<SpeakerModel> &speakers);
std::string EncodeModel(const TvModel &tv);
std::string EncodeModel(const PldaBackend &backend);

/// Kind of a DVMD container (header checks only).
ModelKind PeekModelKind(const std::string &bytes);
HmmSet DecodeHmmSet(const std::string &bytes);
Pgmm DecodePgmm(const std::string &bytes);
MlpModel DecodeMlp(const std::string &bytes);
std::vector<SpeakerModel> DecodeSpeakers(const std::string &bytes);
TvModel DecodeTv(const std::string &bytes);
PldaBackend DecodePlda(const std::string &bytes);

std::string ReadFile(const std::string &path);
/// Writes through a temporary file and renames it into place.
void WriteFile(const std::string &path, const std::string &bytes);

FeatureSequence ReadFeatures(const std::string &path);
void WriteFeatures(const std::string &path, const FeatureSequence &feats);
AlignmentMatrix ReadPosteriors(const std::string &path, AlignmentSource source);
void WritePosteriors(const std::string &path, const AlignmentMatrix &align);

/// Reads any file through `decode`, prefixing errors with the path.
template <typename T, typename Decode>
T ReadWith(const std::string &path, Decode decode) {
  std::string bytes = ReadFile(path);
  try {
    return decode(bytes);
  } catch (const PositionedError &e) {
    throw PositionedError(e.code(), e.offset(), path + ": " + e.bare());
  } catch (const Error &e) {
    throw Error(e.code(), path + ": " + e.detail());
  }
}

}  // namespace dpsv

#endif  // DPSV_IO_H_
