// tests/diag-gmm-test.cc

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

#include <random>

#include "doctest.h"
#include "dpsv/diag-gmm.h"

using namespace dpsv;

namespace {

double NormalPdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

DiagGmm OneDim(std::vector<double> w, std::vector<double> mu, std::vector<double> var) {
  const int c = static_cast<int>(w.size());
  Vector weights(c);
  Matrix means(c, 1), vars(c, 1);
  for (int i = 0; i < c; i++) weights(i) = w[i], means(i, 0) = mu[i], vars(i, 0) = var[i];
  return DiagGmm(weights, means, vars);
}

Matrix Bimodal(int n, unsigned seed, std::vector<int> *labels = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix data(n, 1);
  for (int i = 0; i < n; i++) {
    int label = i % 2;
    data(i, 0) = (label ? 5.0 : -5.0) + noise(rng);
    if (labels) labels->push_back(label);
  }
  return data;
}

}  // namespace

TEST_CASE("log-likelihood of a unit Gaussian") {
  DiagGmm g = OneDim({1.0}, {0.0}, {1.0});
  CHECK(g.LogLikelihood(Vector::Zero(1)) == doctest::Approx(-0.9189385332).epsilon(1e-10));
  CHECK(g.LogLikelihood(Vector::Ones(1)) == doctest::Approx(-1.4189385332).epsilon(1e-10));
}

TEST_CASE("three-component likelihood matches a direct density sum") {
  DiagGmm g = OneDim({0.2, 0.5, 0.3}, {-1.0, 0.5, 3.0}, {0.5, 2.0, 1.5});
  for (double x : {-2.0, 0.0, 0.7, 4.0}) {
    double p = 0.2 * NormalPdf(x, -1.0, 0.5) + 0.5 * NormalPdf(x, 0.5, 2.0) + 0.3 * NormalPdf(x, 3.0, 1.5);
    Vector f = Vector::Constant(1, x);
    CHECK(std::abs(g.LogLikelihood(f) - std::log(p)) < 1e-12);
    Matrix block(1, 1);
    block(0, 0) = x;
    CHECK(std::abs(g.LogLikelihoods(block)(0) - std::log(p)) < 1e-10);
  }
}

TEST_CASE("component posteriors") {
  CHECK(OneDim({1.0}, {2.0}, {3.0}).ComponentPosteriors(Vector::Constant(1, 7.0))(0) == 1.0);
  Vector p = OneDim({0.5, 0.5}, {1.0, 1.0}, {2.0, 2.0}).ComponentPosteriors(Vector::Constant(1, -3.0));
  CHECK(p(0) == 0.5);
  CHECK(p(1) == 0.5);

  DiagGmm g = OneDim({0.3, 0.7}, {0.0, 2.0}, {1.0, 0.25});
  double x = 1.2;
  double a = 0.3 * NormalPdf(x, 0.0, 1.0), b = 0.7 * NormalPdf(x, 2.0, 0.25);
  Vector post = g.ComponentPosteriors(Vector::Constant(1, x));
  CHECK(std::abs(post(0) - a / (a + b)) < 1e-12);
  CHECK(std::abs(post.sum() - 1.0) < 1e-9);
  CHECK_THROWS_WITH_AS(g.ComponentPosteriors(Vector::Zero(2)), doctest::Contains("DimMismatch"), Error);
  CHECK_THROWS_WITH_AS(g.LogLikelihood(Vector::Zero(3)), doctest::Contains("DimMismatch"), Error);
}

TEST_CASE("splitting halves weights") {
  DiagGmm one = OneDim({1.0}, {1.0}, {4.0});
  DiagGmm two = SplitComponents(one);
  CHECK(two.NumComponents() == 2);
  CHECK(two.weights()(0) == 0.5);
  CHECK(two.weights()(1) == 0.5);
  CHECK(two.means()(0, 0) == doctest::Approx(1.4));
  CHECK(two.means()(1, 0) == doctest::Approx(0.6));
  CHECK(std::abs(SplitComponents(two).weights().sum() - 1.0) < 1e-12);
}

TEST_CASE("split then one EM pass increases bimodal likelihood") {
  Matrix data = Bimodal(400, 5);
  Vector floor = VarianceFloor(data, 1e-3);
  DiagGmm one = FitSingleGaussian(data, nullptr, floor);
  double before = one.LogLikelihoods(data).sum();
  DiagGmm two = RunEm(SplitComponents(one), data, nullptr, 1, floor);
  CHECK(two.LogLikelihoods(data).sum() > before);
}

TEST_CASE("C=1 is the closed-form fit") {
  Matrix data = Bimodal(101, 3);
  GmmTrainConfig cfg;
  cfg.target_components = 1;
  DiagGmm g = TrainEm(data, cfg);
  double mean = data.col(0).mean();
  double var = (data.col(0).array() - mean).square().mean();
  CHECK(std::abs(g.means()(0, 0) - mean) < 1e-12);
  CHECK(std::abs(g.variances()(0, 0) - var) < 1e-10);
}

TEST_CASE("EM recovers two well separated clusters") {
  std::vector<int> labels;
  Matrix data = Bimodal(400, 17, &labels);
  double sums[2] = {0, 0};
  int counts[2] = {0, 0};
  for (int i = 0; i < 400; i++) sums[labels[i]] += data(i, 0), counts[labels[i]]++;
  double true_means[2] = {sums[0] / counts[0], sums[1] / counts[1]};

  GmmTrainConfig cfg;
  cfg.target_components = 2;
  // The +-0.2 sigma split starts near a saddle; escaping it takes ~25 passes.
  cfg.em_iterations = 40;
  GmmTrainTrace trace;
  DiagGmm g = TrainEm(data, cfg, &trace);
  for (int c = 0; c < 2; c++) {
    double m = g.means()(c, 0);
    double best = std::min(std::abs(m - true_means[0]), std::abs(m - true_means[1]));
    CHECK(best < 0.3);
  }
  for (size_t i = 1; i < trace.entries.size(); i++) {
    if (trace.entries[i].num_components != trace.entries[i - 1].num_components) continue;
    double prev = trace.entries[i - 1].log_likelihood;
    CHECK(trace.entries[i].log_likelihood >= prev - 1e-8 * std::abs(prev));
  }
}

TEST_CASE("training invariants on multi-dim data") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix data(600, 4);
  for (int i = 0; i < 600; i++)
    for (int d = 0; d < 4; d++) data(i, d) = n(rng) * (d + 1) + 3.0 * ((i / 100) % 3);
  GmmTrainConfig cfg;
  cfg.target_components = 8;
  cfg.em_iterations = 5;
  GmmTrainTrace trace;
  DiagGmm a = TrainEm(data, cfg, &trace);
  DiagGmm b = TrainEm(data, cfg);
  CHECK(a.means() == b.means());
  CHECK(a.variances() == b.variances());
  CHECK(a.weights() == b.weights());
  Vector floor = VarianceFloor(data, cfg.variance_floor);
  for (int c = 0; c < 8; c++)
    for (int d = 0; d < 4; d++) CHECK(a.variances()(c, d) >= floor(d));
  for (int t = 0; t < 600; t += 37)
    CHECK(std::abs(a.ComponentPosteriors(data.row(t).transpose()).sum() - 1.0) < 1e-9);
  for (size_t i = 1; i < trace.entries.size(); i++) {
    if (trace.entries[i].num_components != trace.entries[i - 1].num_components) continue;
    double prev = trace.entries[i - 1].log_likelihood;
    CHECK(trace.entries[i].log_likelihood >= prev - 1e-8 * std::abs(prev));
  }
}

TEST_CASE("training preconditions") {
  GmmTrainConfig cfg;
  cfg.target_components = 4;
  CHECK_THROWS_WITH_AS(TrainEm(Bimodal(3, 1), cfg), doctest::Contains("TooFewSamples"), Error);
  Matrix flat = Matrix::Constant(20, 2, 1.5);
  CHECK_THROWS_WITH_AS(TrainEm(flat, cfg), doctest::Contains("DegenerateData"), Error);
  cfg.target_components = 3;
  CHECK_THROWS_AS(TrainEm(Bimodal(30, 1), cfg), Error);
}
