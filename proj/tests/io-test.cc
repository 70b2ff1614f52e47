// tests/io-test.cc

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

#include <filesystem>

#include "doctest.h"
#include "dpsv/io.h"
#include "samples.h"

using namespace dpsv;

namespace {

template <typename F>
PositionedError Expect(ErrorCode code, F f) {
  try {
    f();
  } catch (const PositionedError &e) {
    CHECK(e.code() == code);
    return e;
  } catch (const std::exception &e) {
    FAIL("unexpected exception: ", e.what());
  }
  FAIL("no error raised");
  return PositionedError(code, 0, "");
}

std::string TempPath(const std::string &name) {
  return (std::filesystem::temp_directory_path() / ("dpsv-io-test-" + name)).string();
}

}  // namespace

TEST_CASE("round trips are exact") {
  FeatureSequence f = samples::Features(6, 120, 1);
  FeatureSequence f2 = DecodeFeatures(EncodeFeatures(f));
  CHECK(f2.frames == f.frames);
  CHECK(f2.kind == FeatureKind::kFbank120);

  SuffStats s = samples::Stats(2), s2 = DecodeStats(EncodeStats(s));
  CHECK(s2.occupancy == s.occupancy);
  CHECK(s2.first == s.first);
  CHECK(s2.second == s.second);
  CHECK(s2.background_id == s.background_id);

  std::vector<IVector> iv = samples::Ivectors(3), iv2 = DecodeIvectors(EncodeIvectors(iv));
  REQUIRE(iv2.size() == 3);
  CHECK(iv2[1].id == "utt1");
  CHECK(iv2[1].normalized);
  CHECK(iv2[2].value == iv[2].value);

  HmmSet h = samples::SmallHmmSet(4), h2 = DecodeHmmSet(EncodeModel(h));
  CHECK(h2.states[7].gmm.means() == h.states[7].gmm.means());
  CHECK(h2.states[7].self_loop == h.states[7].self_loop);

  Pgmm p = samples::SmallPgmm(5);
  CHECK(DecodePgmm(EncodeModel(p)).Fingerprint() == p.Fingerprint());

  MlpModel m = samples::SmallMlp(6), m2 = DecodeMlp(EncodeModel(m));
  CHECK(m2.layers[1].weight == m.layers[1].weight);
  CHECK(m2.log_priors == m.log_priors);

  std::vector<SpeakerModel> spk = samples::Speakers(7), spk2 = DecodeSpeakers(EncodeModel(spk));
  CHECK(spk2[1].speaker_id == "spk002");
  CHECK(spk2[1].means == spk[1].means);

  TvModel tv = samples::SmallTv(8);
  CHECK(DecodeTv(EncodeModel(tv)).t == tv.t);
  PldaBackend be = samples::SmallPlda(9);
  CHECK(DecodePlda(EncodeModel(be)).lda == be.lda);

  // Encoding is a pure function of the value.
  CHECK(EncodeModel(DecodeMlp(EncodeModel(m))) == EncodeModel(m));
  CHECK(PeekModelKind(EncodeModel(tv)) == ModelKind::kTv);
}

TEST_CASE("header errors") {
  std::string b = EncodeFeatures(samples::Features(3, 60, 1));
  std::string magic = b;
  magic[0] = 'X';
  CHECK(Expect(ErrorCode::kBadMagic, [&] { DecodeFeatures(magic); }).offset() == 0);
  std::string version = b;
  version[4] = 2;
  CHECK(Expect(ErrorCode::kUnsupportedVersion, [&] { DecodeFeatures(version); }).offset() == 4);
  Expect(ErrorCode::kBadMagic, [&] { DecodeStats(b); });
  Expect(ErrorCode::kParseError, [&] { DecodePgmm(EncodeModel(samples::SmallTv(1))); });
}

TEST_CASE("truncation reports the file length") {
  std::string b = EncodeStats(samples::Stats(1));
  for (std::size_t len : {std::size_t{2}, std::size_t{5}, std::size_t{9}, b.size() / 2, b.size() - 1}) {
    PositionedError e = Expect(ErrorCode::kTruncated, [&] { DecodeStats(b.substr(0, len)); });
    CHECK(e.offset() <= len);
  }
}

TEST_CASE("checksum catches flipped bytes") {
  std::string b = EncodeFeatures(samples::Features(3, 60, 1));
  b[20] ^= 0x10;
  Expect(ErrorCode::kChecksumMismatch, [&] { DecodeFeatures(b); });
}

TEST_CASE("posterior rows must be normalized") {
  AlignmentMatrix a = samples::Posteriors(3, 1);
  AlignmentMatrix off = a;
  off.posteriors.row(1) *= 0.9;
  PositionedError e = Expect(ErrorCode::kRowNotNormalized, [&] { DecodePosteriors(EncodePosteriors(off), AlignmentSource::kDnn); });
  CHECK(e.offset() == 14 + 4 * kNumStates);  // header, rows, cols, row 0
  CHECK(std::string(e.what()).find("row 1") != std::string::npos);

  AlignmentMatrix slight = a;
  slight.posteriors.row(2) *= 1.0 + 2e-4;
  AlignmentMatrix back = DecodePosteriors(EncodePosteriors(slight), AlignmentSource::kHmmFb);
  CHECK(std::abs(back.posteriors.row(2).sum() - 1.0) < 1e-12);
  CHECK(back.source == AlignmentSource::kHmmFb);

  AlignmentMatrix negative = a;
  negative.posteriors(0, 0) = -0.01;
  negative.posteriors(0, 1) += 0.01;
  Expect(ErrorCode::kRowNotNormalized, [&] { DecodePosteriors(EncodePosteriors(negative), AlignmentSource::kDnn); });
}

TEST_CASE("external posteriors need 33 states") {
  AlignmentMatrix a;
  a.posteriors = Matrix::Constant(4, 30, 1.0 / 30);
  std::string path = TempPath("s30.dvpo");
  WritePosteriors(path, a);
  try {
    LoadExternalPosteriors(path);
    FAIL("expected WrongStateCount");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kWrongStateCount);
  }
  std::filesystem::remove(path);
}

TEST_CASE("file helpers name the path") {
  std::string path = TempPath("bad.dvfe");
  WriteFile(path, "DVFEjunk");
  try {
    ReadFeatures(path);
    FAIL("expected an error");
  } catch (const PositionedError &e) {
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }
  std::filesystem::remove(path);
  try {
    ReadFeatures(path);
    FAIL("expected IoError");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kIoError);
  }
}

TEST_CASE("random corruptions are rejected") {
  for (const samples::Format &f : samples::AllFormats()) {
    CAPTURE(f.name);
    samples::FuzzResult r = samples::Fuzz(f, 200, 77);
    CHECK(r.wrong_error == 0);
    CHECK(r.accepted == 0);
    CHECK(r.reencode_mismatch == 0);
    CHECK(r.positioned + r.resealed_accepted == r.cases);
  }
}
