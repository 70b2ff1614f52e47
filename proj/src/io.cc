// src/io.cc

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

#include "dpsv/io.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <zlib.h>

namespace dpsv {

namespace {

constexpr std::size_t kHeaderSize = 6;
constexpr std::size_t kCrcSize = 4;

class ByteWriter {
 public:
  explicit ByteWriter(const char *magic) {
    buf_.append(magic, 4);
    U16(kFormatVersion);
  }

  void U8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void U16(std::uint16_t v) { Le(v, 2); }
  void U32(std::uint32_t v) { Le(v, 4); }
  void U64(std::uint64_t v) { Le(v, 8); }
  void I32(std::int32_t v) { Le(static_cast<std::uint32_t>(v), 4); }
  void F32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    U32(bits);
  }
  void F64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    U64(bits);
  }
  void Str(const std::string &s) {
    if (s.size() > 0xffff) Fail(ErrorCode::kConfigInvalid, "string too long to serialize: ", s.size(), " bytes");
    U16(static_cast<std::uint16_t>(s.size()));
    buf_ += s;
  }
  void Raw(const std::string &s) { buf_ += s; }
  void Vec(const Vector &v) {
    U32(Count(v.size()));
    for (Eigen::Index i = 0; i < v.size(); i++) F64(v(i));
  }
  void Mat(const Matrix &m) {
    U32(Count(m.rows()));
    U32(Count(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); i++)
      for (Eigen::Index j = 0; j < m.cols(); j++) F64(m(i, j));
  }
  void Gmm(const DiagGmm &g) {
    Vec(g.weights());
    Mat(g.means());
    Mat(g.variances());
  }

  // Appends the CRC trailer and returns the finished bytes.
  std::string Finish() {
    U32(static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef *>(buf_.data()), static_cast<uInt>(buf_.size()))));
    return std::move(buf_);
  }
  std::string &buffer() { return buf_; }

  static std::uint32_t Count(Eigen::Index n) {
    if (n < 0 || n > 0xffffffffLL) Fail(ErrorCode::kConfigInvalid, "dimension ", n, " does not fit in 32 bits");
    return static_cast<std::uint32_t>(n);
  }

 private:
  void Le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; i++) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class ByteReader {
 public:
  // Reads [begin, end) of `bytes`; offsets in errors are absolute.
  ByteReader(const std::string &bytes, std::size_t begin, std::size_t end) : b_(bytes), pos_(begin), end_(end) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }

  void Need(std::size_t n, const char *what) {
    if (n > remaining())
      throw PositionedError(ErrorCode::kTruncated, b_.size() < end_ ? b_.size() : end_,
                            std::string("file ends inside ") + what);
  }
  std::uint64_t Le(int bytes, const char *what) {
    Need(bytes, what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; i++) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += bytes;
    return v;
  }
  std::uint8_t U8(const char *what) { return static_cast<std::uint8_t>(Le(1, what)); }
  std::uint16_t U16(const char *what) { return static_cast<std::uint16_t>(Le(2, what)); }
  std::uint32_t U32(const char *what) { return static_cast<std::uint32_t>(Le(4, what)); }
  std::uint64_t U64(const char *what) { return Le(8, what); }
  std::int32_t I32(const char *what) { return static_cast<std::int32_t>(U32(what)); }
  float F32(const char *what) {
    std::size_t at = pos_;
    std::uint32_t bits = U32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    if (!std::isfinite(v)) throw PositionedError(ErrorCode::kParseError, at, std::string("non-finite ") + what);
    return v;
  }
  double F64(const char *what) {
    std::size_t at = pos_;
    std::uint64_t bits = U64(what);
    double v;
    std::memcpy(&v, &bits, 8);
    if (!std::isfinite(v)) throw PositionedError(ErrorCode::kParseError, at, std::string("non-finite ") + what);
    return v;
  }
  std::string Str(const char *what) {
    std::uint16_t n = U16(what);
    Need(n, what);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  // Checks that `count` items of at least `item_bytes` each can still fit.
  void NeedItems(std::uint64_t count, std::uint64_t item_bytes, const char *what) {
    if (item_bytes != 0 && count > remaining() / item_bytes)
      throw PositionedError(ErrorCode::kTruncated, b_.size() < end_ ? b_.size() : end_,
                            std::string("file too short for ") + std::to_string(count) + " " + what);
  }
  Vector Vec(const char *what) {
    std::uint32_t n = U32(what);
    NeedItems(n, 8, what);
    Vector v(n);
    for (std::uint32_t i = 0; i < n; i++) v(i) = F64(what);
    return v;
  }
  Matrix Mat(const char *what) {
    std::uint32_t rows = U32(what), cols = U32(what);
    if (cols != 0) NeedItems(rows, 8ull * cols, what);
    Matrix m(rows, cols);
    for (std::uint32_t i = 0; i < rows; i++)
      for (std::uint32_t j = 0; j < cols; j++) m(i, j) = F64(what);
    return m;
  }
  DiagGmm Gmm(const char *what) {
    std::size_t at = pos_;
    Vector w = Vec(what);
    Matrix mu = Mat(what), var = Mat(what);
    try {
      return DiagGmm(w, mu, var);
    } catch (const Error &e) {
      throw PositionedError(ErrorCode::kParseError, at, std::string("invalid ") + what + ": " + e.detail());
    }
  }
  void ExpectEnd(const char *what) {
    if (pos_ != end_) throw PositionedError(ErrorCode::kParseError, pos_, std::string("unexpected bytes after ") + what);
  }

 private:
  const std::string &b_;
  std::size_t pos_;
  std::size_t end_;
};

// Checks magic and version; returns a reader positioned after them and
// covering everything but the CRC trailer.
ByteReader OpenChecked(const std::string &bytes, const char *magic) {
  if (bytes.size() < 4 || bytes.compare(0, 4, magic, 4) != 0) {
    if (bytes.size() < 4 && bytes.compare(0, bytes.size(), magic, bytes.size()) == 0)
      throw PositionedError(ErrorCode::kTruncated, bytes.size(), "file ends inside the magic");
    throw PositionedError(ErrorCode::kBadMagic, 0, std::string("expected magic ") + magic);
  }
  if (bytes.size() < kHeaderSize) throw PositionedError(ErrorCode::kTruncated, bytes.size(), "file ends inside the version");
  std::uint16_t version = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[4]) |
                                                     (static_cast<unsigned char>(bytes[5]) << 8));
  if (version != kFormatVersion)
    throw PositionedError(ErrorCode::kUnsupportedVersion, 4, "version " + std::to_string(version) + " is not supported");
  if (bytes.size() < kHeaderSize + kCrcSize)
    throw PositionedError(ErrorCode::kTruncated, bytes.size(), "file ends before the body");
  return ByteReader(bytes, kHeaderSize, bytes.size() - kCrcSize);
}

void VerifyCrc(const std::string &bytes) {
  std::size_t body = bytes.size() - kCrcSize;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; i++) stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[body + i])) << (8 * i);
  std::uint32_t actual = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef *>(bytes.data()), static_cast<uInt>(body)));
  if (stored != actual) throw PositionedError(ErrorCode::kChecksumMismatch, body, "checksum does not match contents");
}

// For fixed-layout files: the declared size must equal the actual size.
void CheckSize(const std::string &bytes, std::uint64_t expected_body_end) {
  std::uint64_t expected = expected_body_end + kCrcSize;
  if (bytes.size() < expected)
    throw PositionedError(ErrorCode::kTruncated, bytes.size(),
                          "file is " + std::to_string(bytes.size()) + " bytes, header implies " + std::to_string(expected));
  if (bytes.size() > expected)
    throw PositionedError(ErrorCode::kParseError, expected_body_end, "unexpected bytes after the declared data");
}

FeatureKind KindForDim(int cols) {
  if (cols == 120) return FeatureKind::kFbank120;
  if (cols == 60) return FeatureKind::kMfcc60;
  if (cols % 120 == 0) return FeatureKind::kSpliced;
  return FeatureKind::kMfcc60;
}

std::string EncodeFloatMatrix(const char *magic, const Matrix &m) {
  ByteWriter w(magic);
  w.U32(ByteWriter::Count(m.rows()));
  w.U32(ByteWriter::Count(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); i++)
    for (Eigen::Index j = 0; j < m.cols(); j++) w.F32(static_cast<float>(m(i, j)));
  return w.Finish();
}

Matrix DecodeFloatMatrix(const char *magic, const std::string &bytes) {
  ByteReader r = OpenChecked(bytes, magic);
  std::uint32_t rows = r.U32("row count"), cols = r.U32("column count");
  if (cols == 0) throw PositionedError(ErrorCode::kParseError, 10, "zero columns");
  CheckSize(bytes, kHeaderSize + 8 + 4ull * rows * cols);
  VerifyCrc(bytes);
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; i++)
    for (std::uint32_t j = 0; j < cols; j++) m(i, j) = r.F32("matrix entry");
  return m;
}

struct ModelHeader {
  ModelKind kind;
  std::size_t payload_begin;
  std::size_t payload_end;
};

constexpr ModelKind kAllKinds[] = {ModelKind::kHmmSet, ModelKind::kPgmm, ModelKind::kMlp,
                                   ModelKind::kSpeakers, ModelKind::kTv, ModelKind::kPlda};

ModelHeader OpenModel(const std::string &bytes) {
  ByteReader r = OpenChecked(bytes, "DVMD");
  r.Need(4, "kind tag");
  std::string tag = bytes.substr(r.pos(), 4);
  ModelHeader h{ModelKind::kHmmSet, 0, 0};
  bool known = false;
  for (ModelKind k : kAllKinds)
    if (tag == ModelKindTag(k)) {
      h.kind = k;
      known = true;
    }
  if (!known) throw PositionedError(ErrorCode::kParseError, r.pos(), "unknown model kind tag");
  r.U32("kind tag");
  std::uint64_t length = r.U64("payload length");
  h.payload_begin = r.pos();
  if (length > r.remaining())
    throw PositionedError(ErrorCode::kTruncated, bytes.size(), "payload of " + std::to_string(length) + " bytes is cut short");
  CheckSize(bytes, h.payload_begin + length);
  h.payload_end = h.payload_begin + length;
  VerifyCrc(bytes);
  return h;
}

ByteReader OpenPayload(const std::string &bytes, ModelKind expected) {
  ModelHeader h = OpenModel(bytes);
  if (h.kind != expected)
    throw PositionedError(ErrorCode::kParseError, kHeaderSize,
                          std::string("expected a ") + ModelKindTag(expected) + " model, found " + ModelKindTag(h.kind));
  return ByteReader(bytes, h.payload_begin, h.payload_end);
}

std::string FinishModel(ModelKind kind, ByteWriter &payload_writer) {
  ByteWriter w("DVMD");
  w.Raw(ModelKindTag(kind));
  // The payload writer carries its own (unused) header.
  std::string payload = payload_writer.buffer().substr(kHeaderSize);
  w.U64(payload.size());
  w.Raw(payload);
  return w.Finish();
}

// Runs a semantic validity check on a decoded object, mapping failures to a
// positioned error at the payload start.
template <typename F>
void Validate(std::size_t at, F check) {
  try {
    check();
  } catch (const PositionedError &) {
    throw;
  } catch (const Error &e) {
    throw PositionedError(ErrorCode::kParseError, at, "invalid model: " + e.detail());
  }
}

constexpr std::size_t kPayloadStart = kHeaderSize + 4 + 8;

}  // namespace

const char *ModelKindTag(ModelKind kind) {
  switch (kind) {
    case ModelKind::kHmmSet: return "HMMS";
    case ModelKind::kPgmm: return "PGMM";
    case ModelKind::kMlp: return "MLPM";
    case ModelKind::kSpeakers: return "SPKR";
    case ModelKind::kTv: return "TVMD";
    case ModelKind::kPlda: return "PLDA";
  }
  return "????";
}

std::string EncodeFeatures(const FeatureSequence &feats) { return EncodeFloatMatrix("DVFE", feats.frames); }

FeatureSequence DecodeFeatures(const std::string &bytes) {
  FeatureSequence out;
  out.frames = DecodeFloatMatrix("DVFE", bytes);
  out.kind = KindForDim(static_cast<int>(out.frames.cols()));
  return out;
}

std::string EncodePosteriors(const AlignmentMatrix &align) { return EncodeFloatMatrix("DVPO", align.posteriors); }

AlignmentMatrix DecodePosteriors(const std::string &bytes, AlignmentSource source) {
  AlignmentMatrix out;
  out.source = source;
  out.posteriors = DecodeFloatMatrix("DVPO", bytes);
  const std::size_t row_bytes = 4 * static_cast<std::size_t>(out.posteriors.cols());
  for (int t = 0; t < out.NumFrames(); t++) {
    double sum = out.posteriors.row(t).sum();
    std::size_t at = kHeaderSize + 8 + t * row_bytes;
    if ((out.posteriors.row(t).array() < 0).any())
      throw PositionedError(ErrorCode::kRowNotNormalized, at, "row " + std::to_string(t) + " has a negative entry");
    if (std::abs(sum - 1.0) > 1e-3)
      throw PositionedError(ErrorCode::kRowNotNormalized, at, "row " + std::to_string(t) + " sums to " + std::to_string(sum));
    if (std::abs(sum - 1.0) > 1e-5) out.posteriors.row(t) /= sum;
  }
  return out;
}

void WritePosteriors(const std::string &path, const AlignmentMatrix &align) { WriteFile(path, EncodePosteriors(align)); }

AlignmentMatrix ReadPosteriors(const std::string &path, AlignmentSource source) {
  return ReadWith<AlignmentMatrix>(path, [&](const std::string &b) { return DecodePosteriors(b, source); });
}

std::string EncodeStats(const SuffStats &stats) {
  ByteWriter w("DVST");
  w.U32(ByteWriter::Count(stats.NumMixtures()));
  w.U32(ByteWriter::Count(stats.Dim()));
  for (int m = 0; m < stats.NumMixtures(); m++) {
    w.F64(stats.occupancy(m));
    for (int d = 0; d < stats.Dim(); d++) w.F64(stats.first(m, d));
    for (int d = 0; d < stats.Dim(); d++) w.F64(stats.second(m, d));
  }
  w.Str(stats.background_id);
  return w.Finish();
}

SuffStats DecodeStats(const std::string &bytes) {
  ByteReader r = OpenChecked(bytes, "DVST");
  std::uint32_t mixtures = r.U32("mixture count"), dim = r.U32("dimension");
  if (mixtures == 0 || dim == 0) throw PositionedError(ErrorCode::kParseError, kHeaderSize, "empty statistics");
  r.NeedItems(mixtures, 8ull * (1 + 2ull * dim), "mixture blocks");
  SuffStats s = SuffStats::Zero(static_cast<int>(mixtures), static_cast<int>(dim));
  for (std::uint32_t m = 0; m < mixtures; m++) {
    std::size_t at = r.pos();
    s.occupancy(m) = r.F64("occupancy");
    if (s.occupancy(m) < 0) throw PositionedError(ErrorCode::kParseError, at, "negative occupancy");
    for (std::uint32_t d = 0; d < dim; d++) s.first(m, d) = r.F64("first-order statistic");
    for (std::uint32_t d = 0; d < dim; d++) s.second(m, d) = r.F64("second-order statistic");
  }
  s.background_id = r.Str("background fingerprint");
  r.ExpectEnd("statistics");
  VerifyCrc(bytes);
  return s;
}

std::string EncodeIvectors(const std::vector<IVector> &ivectors) {
  ByteWriter w("DVIV");
  const Eigen::Index dim = ivectors.empty() ? 0 : ivectors[0].value.size();
  w.U32(ByteWriter::Count(static_cast<Eigen::Index>(ivectors.size())));
  w.U32(ByteWriter::Count(dim));
  for (const IVector &v : ivectors) {
    if (v.value.size() != dim) Fail(ErrorCode::kDimMismatch, "i-vector ", v.id, " has dimension ", v.value.size());
    w.Str(v.id);
    w.U8(v.normalized ? 1 : 0);
    for (Eigen::Index i = 0; i < dim; i++) w.F64(v.value(i));
  }
  return w.Finish();
}

std::vector<IVector> DecodeIvectors(const std::string &bytes) {
  ByteReader r = OpenChecked(bytes, "DVIV");
  std::uint32_t count = r.U32("entry count"), dim = r.U32("dimension");
  r.NeedItems(count, 3 + 8ull * dim, "i-vector entries");
  std::vector<IVector> out(count);
  for (IVector &v : out) {
    v.id = r.Str("i-vector id");
    std::size_t at = r.pos();
    std::uint8_t flag = r.U8("normalization flag");
    if (flag > 1) throw PositionedError(ErrorCode::kParseError, at, "normalization flag must be 0 or 1");
    v.normalized = flag == 1;
    v.value.resize(dim);
    for (std::uint32_t i = 0; i < dim; i++) v.value(i) = r.F64("i-vector entry");
  }
  r.ExpectEnd("i-vector archive");
  VerifyCrc(bytes);
  return out;
}

std::string EncodeModel(const HmmSet &hmms) {
  ByteWriter w("DVMD");
  w.U32(ByteWriter::Count(static_cast<Eigen::Index>(hmms.states.size())));
  for (const HmmState &s : hmms.states) {
    w.F64(s.self_loop);
    w.Gmm(s.gmm);
  }
  return FinishModel(ModelKind::kHmmSet, w);
}

HmmSet DecodeHmmSet(const std::string &bytes) {
  ByteReader r = OpenPayload(bytes, ModelKind::kHmmSet);
  std::uint32_t n = r.U32("state count");
  r.NeedItems(n, 8 + 12, "HMM states");
  HmmSet out;
  out.states.resize(n);
  for (HmmState &s : out.states) {
    s.self_loop = r.F64("self-loop probability");
    s.gmm = r.Gmm("state GMM");
  }
  r.ExpectEnd("HMM set");
  Validate(kPayloadStart, [&] {
    out.Check();
    for (const HmmState &s : out.states)
      if (!(s.self_loop > 0 && s.self_loop < 1)) Fail(ErrorCode::kParseError, "self-loop outside (0, 1)");
  });
  return out;
}

std::string EncodeModel(const Pgmm &pgmm) {
  ByteWriter w("DVMD");
  w.U32(ByteWriter::Count(pgmm.NumStates()));
  for (int s : pgmm.states) w.I32(s);
  for (const DiagGmm &g : pgmm.gmms) w.Gmm(g);
  w.Vec(pgmm.variance_floor);
  return FinishModel(ModelKind::kPgmm, w);
}

Pgmm DecodePgmm(const std::string &bytes) {
  ByteReader r = OpenPayload(bytes, ModelKind::kPgmm);
  std::uint32_t n = r.U32("state count");
  r.NeedItems(n, 4 + 12, "PGMM states");
  Pgmm out;
  for (std::uint32_t i = 0; i < n; i++) out.states.push_back(r.I32("state index"));
  for (std::uint32_t i = 0; i < n; i++) out.gmms.push_back(r.Gmm("state GMM"));
  out.variance_floor = r.Vec("variance floor");
  r.ExpectEnd("PGMM");
  Validate(kPayloadStart, [&] { out.Check(); });
  return out;
}

std::string EncodeModel(const MlpModel &mlp) {
  ByteWriter w("DVMD");
  w.Vec(mlp.input_mean);
  w.Vec(mlp.input_inv_std);
  w.U32(ByteWriter::Count(static_cast<Eigen::Index>(mlp.layers.size())));
  for (const MlpLayer &l : mlp.layers) {
    w.Mat(l.weight);
    w.Vec(l.bias);
  }
  w.Vec(mlp.log_priors);
  return FinishModel(ModelKind::kMlp, w);
}

MlpModel DecodeMlp(const std::string &bytes) {
  ByteReader r = OpenPayload(bytes, ModelKind::kMlp);
  MlpModel out;
  out.input_mean = r.Vec("input mean");
  out.input_inv_std = r.Vec("input scale");
  std::uint32_t n = r.U32("layer count");
  r.NeedItems(n, 12, "layers");
  out.layers.resize(n);
  for (MlpLayer &l : out.layers) {
    l.weight = r.Mat("layer weights");
    l.bias = r.Vec("layer bias");
  }
  out.log_priors = r.Vec("log priors");
  r.ExpectEnd("MLP");
  Validate(kPayloadStart, [&] { out.Check(); });
  return out;
}

std::string EncodeModel(const std::vector<SpeakerModel> &speakers) {
  ByteWriter w("DVMD");
  w.U32(ByteWriter::Count(static_cast<Eigen::Index>(speakers.size())));
  for (const SpeakerModel &s : speakers) {
    w.Str(s.speaker_id);
    w.Str(s.background_id);
    w.F64(s.relevance);
    w.Mat(s.means);
  }
  return FinishModel(ModelKind::kSpeakers, w);
}

std::vector<SpeakerModel> DecodeSpeakers(const std::string &bytes) {
  ByteReader r = OpenPayload(bytes, ModelKind::kSpeakers);
  std::uint32_t n = r.U32("speaker count");
  r.NeedItems(n, 2 + 2 + 8 + 8, "speaker models");
  std::vector<SpeakerModel> out(n);
  for (SpeakerModel &s : out) {
    s.speaker_id = r.Str("speaker id");
    s.background_id = r.Str("background fingerprint");
    s.relevance = r.F64("relevance factor");
    s.means = r.Mat("adapted means");
  }
  r.ExpectEnd("speaker models");
  Validate(kPayloadStart, [&] {
    for (const SpeakerModel &s : out) {
      s.Check();
      if (s.means.rows() != out[0].means.rows() || s.means.cols() != out[0].means.cols())
        Fail(ErrorCode::kShapeMismatch, "speaker models differ in shape");
    }
  });
  return out;
}

std::string EncodeModel(const TvModel &tv) {
  ByteWriter w("DVMD");
  w.Str(tv.background_id);
  w.Mat(tv.t);
  w.Mat(tv.means);
  w.Mat(tv.variances);
  return FinishModel(ModelKind::kTv, w);
}

TvModel DecodeTv(const std::string &bytes) {
  ByteReader r = OpenPayload(bytes, ModelKind::kTv);
  TvModel out;
  out.background_id = r.Str("background fingerprint");
  out.t = r.Mat("subspace matrix");
  out.means = r.Mat("background means");
  out.variances = r.Mat("background variances");
  r.ExpectEnd("TV model");
  Validate(kPayloadStart, [&] { out.Check(); });
  return out;
}

std::string EncodeModel(const PldaBackend &backend) {
  ByteWriter w("DVMD");
  w.Vec(backend.mean);
  w.Mat(backend.lda);
  w.Vec(backend.plda_mean);
  w.Mat(backend.between);
  w.Mat(backend.within);
  return FinishModel(ModelKind::kPlda, w);
}

PldaBackend DecodePlda(const std::string &bytes) {
  ByteReader r = OpenPayload(bytes, ModelKind::kPlda);
  PldaBackend out;
  out.mean = r.Vec("i-vector mean");
  out.lda = r.Mat("LDA projection");
  out.plda_mean = r.Vec("PLDA mean");
  out.between = r.Mat("between-speaker covariance");
  out.within = r.Mat("within-speaker covariance");
  r.ExpectEnd("PLDA backend");
  Validate(kPayloadStart, [&] { out.Check(); });
  return out;
}

ModelKind PeekModelKind(const std::string &bytes) { return OpenModel(bytes).kind; }

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open ", path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) Fail(ErrorCode::kIoError, "error reading ", path);
  return bytes;
}

void WriteFile(const std::string &path, const std::string &bytes) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIoError, "cannot write ", tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorCode::kIoError, "error writing ", tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot rename ", tmp, " to ", path, ": ", ec.message());
}

FeatureSequence ReadFeatures(const std::string &path) { return ReadWith<FeatureSequence>(path, DecodeFeatures); }

void WriteFeatures(const std::string &path, const FeatureSequence &feats) { WriteFile(path, EncodeFeatures(feats)); }

}  // namespace dpsv
