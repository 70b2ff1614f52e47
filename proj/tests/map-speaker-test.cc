// tests/map-speaker-test.cc

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

#include <cmath>
#include <random>

#include "doctest.h"
#include "dpsv/map-speaker.h"
#include "oracles.h"

using namespace dpsv;

namespace {

SuffStats OneMixtureStats(double n, double f) {
  SuffStats s = SuffStats::Zero(1, 1);
  s.occupancy(0) = n;
  s.first(0, 0) = f;
  return s;
}

Pgmm OneDimBackground() {
  Vector w(2);
  w << 0.5, 0.5;
  Matrix mu(2, 1), var(2, 1);
  mu << -1.0, 2.0;
  var << 1.0, 0.5;
  return PgmmFromUbm(DiagGmm(w, mu, var), Vector::Constant(1, 1e-3));
}

FeatureSequence Feats(std::vector<double> xs) {
  FeatureSequence f;
  f.frames.resize(static_cast<Eigen::Index>(xs.size()), 1);
  for (size_t i = 0; i < xs.size(); i++) f.frames(static_cast<Eigen::Index>(i), 0) = xs[i];
  return f;
}

}  // namespace

TEST_CASE("map adaptation hand case") {
  Matrix mu = Matrix::Constant(1, 1, 1.0);
  // Three frames with mean 3: F = 3 * (3 - 1).
  SpeakerModel s = MapAdapt(mu, OneMixtureStats(3.0, 6.0), 5.0);
  CHECK(std::abs(s.means(0, 0) - 1.75) < 1e-15);
  double alpha = 3.0 / 8.0;
  CHECK(std::abs(s.means(0, 0) - (alpha * 3.0 + (1 - alpha) * 1.0)) < 1e-15);
}

TEST_CASE("unobserved mixtures keep the background mean") {
  Matrix mu(2, 3);
  mu << 1, 2, 3, 4, 5, 6;
  SuffStats s = SuffStats::Zero(2, 3);
  s.occupancy(0) = 2.0;
  s.first.row(0) << 1.0, 1.0, 1.0;
  SpeakerModel m = MapAdapt(mu, s, 4.0);
  CHECK(m.means.row(1) == mu.row(1));
  CHECK(m.means.row(0) != mu.row(0));
}

TEST_CASE("adapted means lie between the background mean and the data mean") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0), pos(0.01, 50.0);
  for (int trial = 0; trial < 200; trial++) {
    double mu = u(rng), xbar = u(rng), n = pos(rng), r = pos(rng);
    SpeakerModel m = MapAdapt(Matrix::Constant(1, 1, mu), OneMixtureStats(n, n * (xbar - mu)), r);
    double lo = std::min(mu, xbar), hi = std::max(mu, xbar);
    CHECK(m.means(0, 0) >= lo - 1e-12);
    CHECK(m.means(0, 0) <= hi + 1e-12);
  }
}

TEST_CASE("large counts approach the data mean") {
  SpeakerModel m = MapAdapt(Matrix::Constant(1, 1, 0.0), OneMixtureStats(1e6, 1e6 * 2.5), 16.0);
  CHECK(std::abs(m.means(0, 0) - 2.5) < 1e-4);
  CHECK_THROWS_AS(MapAdapt(Matrix::Constant(1, 1, 0.0), OneMixtureStats(1, 1), 0.0), Error);
}

TEST_CASE("llr scoring") {
  Pgmm bg = OneDimBackground();
  FeatureSequence f = Feats({0.3, 1.7, -0.4});
  MixturePosteriors g;
  g.num_mixtures = 2;
  g.frames = {{{0, 0.6}, {1, 0.2}}, {{1, 1.0}}, {}};

  SUBCASE("identical model scores zero") {
    SpeakerModel s{"a", bg.Means(), bg.Fingerprint(), 5.0};
    CHECK(LlrScore(s, bg, g, f) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("matches a scalar evaluation normalized by retained mass") {
    Matrix shifted = bg.Means();
    shifted(0, 0) += 0.5;
    shifted(1, 0) -= 0.25;
    SpeakerModel s{"a", shifted, bg.Fingerprint(), 5.0};
    double num = 0.0, mass = 0.0;
    for (int t = 0; t < 3; t++)
      for (const auto &[m, w] : g.frames[t]) {
        double x = f.frames(t, 0), v = bg.Variances()(m, 0);
        num += w * (oracle::NormalLogPdf(x, shifted(m, 0), v) - oracle::NormalLogPdf(x, bg.Means()(m, 0), v));
        mass += w;
      }
    CHECK(std::abs(LlrScore(s, bg, g, f) - num / mass) < 1e-12);
  }
  SUBCASE("no retained frames") {
    MixturePosteriors empty;
    empty.num_mixtures = 2;
    empty.frames.resize(3);
    SpeakerModel s{"a", bg.Means(), bg.Fingerprint(), 5.0};
    try {
      LlrScore(s, bg, empty, f);
      FAIL("expected NoRetainedFrames");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::kNoRetainedFrames);
    }
  }
  SUBCASE("foreign background") {
    SpeakerModel s{"a", bg.Means(), "0123", 5.0};
    try {
      LlrScore(s, bg, g, f);
      FAIL("expected InconsistentBackground");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::kInconsistentBackground);
    }
  }
}

TEST_CASE("enrollment merges statistics before adapting") {
  Pgmm bg = OneDimBackground();
  std::vector<std::pair<MixturePosteriors, FeatureSequence>> utts;
  FeatureSequence a = Feats({0.2, 2.5}), b = Feats({1.9, 2.1, -1.3});
  utts.push_back({UbmMixturePosteriors(bg, a), a});
  utts.push_back({UbmMixturePosteriors(bg, b), b});
  SpeakerModel s = Enroll(bg, utts, 3.0);

  SuffStats merged = AccumulateStats(utts[0].first, a, bg.Means());
  merged.Add(AccumulateStats(utts[1].first, b, bg.Means()));
  SpeakerModel direct = MapAdapt(bg.Means(), merged, 3.0);
  CHECK((s.means - direct.means).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(s.background_id == bg.Fingerprint());

  // Adapting each utterance and averaging is a different estimate.
  Matrix averaged = 0.5 * (MapAdapt(bg.Means(), AccumulateStats(utts[0].first, a, bg.Means()), 3.0).means +
                           MapAdapt(bg.Means(), AccumulateStats(utts[1].first, b, bg.Means()), 3.0).means);
  CHECK((s.means - averaged).cwiseAbs().maxCoeff() > 1e-3);

  try {
    Enroll(bg, {}, 3.0);
    FAIL("expected EmptyEnrollment");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kEmptyEnrollment);
  }
}
