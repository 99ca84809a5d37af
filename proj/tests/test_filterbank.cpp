/* Copyright 2026 The rawatt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "rawatt/error.hpp"
#include "rawatt/filterbank.hpp"
#include "rawatt/gradcheck.hpp"
#include "test_util.hpp"

using namespace rawatt;
using rawatt::testing::random_matrix;

namespace {

constexpr double kPi = std::numbers::pi;

// Brute-force DFT magnitude peak of a zero-padded real sequence.
int dft_peak_bin(const Vector& taps, int n_fft) {
  int best = 0;
  double best_mag = -1.0;
  for (int b = 0; b <= n_fft / 2; ++b) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index n = 0; n < taps.size(); ++n) {
      acc += taps[n] * std::polar(1.0, -2.0 * kPi * b * static_cast<double>(n) / n_fft);
    }
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best = b;
    }
  }
  return best;
}

// Direct evaluation of the filterbank forward, no shared code with the library.
double brute_energy(const Matrix& frames, int col, double mu, int k) {
  const int half = (k - 1) / 2;
  const auto s = static_cast<int>(frames.rows());
  double acc = 0.0;
  for (int m = 0; m < s - k + 1; ++m) {
    double out = 0.0;
    for (int q = 0; q < k; ++q) {
      const int n = q - half;
      out += std::cos(2.0 * kPi * mu * n) * std::exp(-0.5 * n * n * mu * mu) * frames(m + k - 1 - q, col);
    }
    acc += out * out;
  }
  return std::log(acc / (s - k + 1) + 1e-10);
}

FrameBlock block_of(Eigen::MatrixXd data) {
  FrameBlock b;
  b.data = std::move(data);
  b.frame_shift = static_cast<int>(b.data.rows());
  return b;
}

double mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_inv(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

TEST_CASE("make_kernel tap values") {
  const Vector w = make_kernel(0.25, 5);
  REQUIRE(w.size() == 5);
  CHECK(w[0] == doctest::Approx(-0.882497).epsilon(1e-6));
  CHECK(std::abs(w[1]) < 1e-15);
  CHECK(w[2] == 1.0);
  CHECK(std::abs(w[3]) < 1e-15);
  CHECK(w[4] == doctest::Approx(-0.882497).epsilon(1e-6));
  CHECK(w[0] == doctest::Approx(-std::exp(-0.125)));

  for (double mu : {0.01, 0.1, 0.33, 0.49}) {
    const Vector v = make_kernel(mu, 129);
    CHECK(v[64] == 1.0);
    CHECK(v == v.reverse().eval());
  }
}

TEST_CASE("make_kernel rejects invalid arguments") {
  CHECK_THROWS_AS(make_kernel(0.0, 5), DomainError);
  CHECK_THROWS_AS(make_kernel(0.5, 5), DomainError);
  CHECK_THROWS_AS(make_kernel(-0.1, 5), DomainError);
  CHECK_THROWS_AS(make_kernel(std::nan(""), 5), DomainError);
  CHECK_THROWS_AS(make_kernel(0.1, 4), ArgumentError);
  CHECK_THROWS_AS(make_kernel(0.1, 0), ArgumentError);
  CHECK_THROWS_AS(kernel_grad_mu(0.7, 5), DomainError);
}

TEST_CASE("kernel DFT peak sits at mu times the DFT size") {
  CHECK(std::abs(dft_peak_bin(make_kernel(0.1, 129), 1024) - 102) <= 1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.02, 0.39);
  for (int i = 0; i < 20; ++i) {
    const double mu = unit(rng);
    CHECK(std::abs(dft_peak_bin(make_kernel(mu, 129), 1024) - mu * 1024.0) <= 1.0);
  }
}

TEST_CASE("kernel DFT peak drifts toward Nyquist for large mu") {
  // The spectral lobe has std mu / (2 pi); close to 0.5 it merges with its
  // mirror image and the magnitude peak moves off mu.
  CHECK(dft_peak_bin(make_kernel(0.45, 129), 1024) > 0.45 * 1024.0 + 1.0);
  CHECK(dft_peak_bin(make_kernel(0.475, 129), 1024) == 512);
}

TEST_CASE("kernel envelope half-width is non-increasing in mu") {
  auto half_width = [](double mu) {
    int n = 0;
    while (std::exp(-0.5 * n * n * mu * mu) >= 0.5) ++n;
    return n;
  };
  int prev = 1 << 30;
  for (double mu = 0.005; mu < 0.5; mu += 0.005) {
    const Vector w = make_kernel(mu, 129);
    for (int q = 0; q < 129; ++q) {
      const int n = q - 64;
      REQUIRE(std::abs(w[q]) <= std::exp(-0.5 * n * n * mu * mu) + 1e-15);
    }
    const int hw = half_width(mu);
    CHECK(hw <= prev);
    prev = hw;
  }
}

TEST_CASE("kernel_grad_mu matches finite differences and is even") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.02, 0.48);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = unit(rng);
    const Vector g = kernel_grad_mu(mu, 129);
    const Vector fd = (make_kernel(mu + h, 129) - make_kernel(mu - h, 129)) / (2.0 * h);
    CHECK(g[64] == 0.0);
    CHECK(g == g.reverse().eval());
    for (int q = 0; q < 129; ++q) {
      REQUIRE(relative_error(g[q], fd[q]) < 1e-5);
    }
  }
}

TEST_CASE("mel_init spacing") {
  const FilterbankParams two = mel_init(2, 16000, 0.01, 0.3);
  CHECK(two.mu[0] == 0.01);
  CHECK(two.mu[1] == 0.3);

  const FilterbankParams three = mel_init(3, 16000, 0.01, 0.3);
  const double mid = mel_inv(0.5 * (mel(0.01 * 16000) + mel(0.3 * 16000))) / 16000.0;
  CHECK(three.mu[1] == doctest::Approx(mid).epsilon(1e-12));

  const FilterbankParams full = mel_init(80, 16000, 60.0 / 16000, 7600.0 / 16000);
  CHECK(full.k == 129);
  for (int i = 0; i < 80; ++i) {
    CHECK(full.mu[i] > 0.0);
    CHECK(full.mu[i] < 0.5);
    if (i > 0) CHECK(full.mu[i] > full.mu[i - 1]);
    // Equal mel spacing.
    if (i > 1) {
      const double d1 = mel(full.mu[i] * 16000) - mel(full.mu[i - 1] * 16000);
      const double d0 = mel(full.mu[i - 1] * 16000) - mel(full.mu[i - 2] * 16000);
      CHECK(d1 == doctest::Approx(d0).epsilon(1e-9));
    }
  }
}

TEST_CASE("filterbank_forward matches a brute-force convolution oracle") {
  std::mt19937_64 rng(21);
  const FrameBlock frames = block_of(random_matrix(rng, 48, 4, 0.5));
  FilterbankParams params{Vector(3), 11};
  params.mu << 0.05, 0.21, 0.4;
  FilterbankTrace trace;
  const FeatureBlock fb = filterbank_forward(frames, params, &trace);
  REQUIRE(fb.x.rows() == 3);
  REQUIRE(fb.x.cols() == 4);
  REQUIRE(trace.conv.size() == 4);
  CHECK(trace.conv[0].rows() == 48 - 11 + 1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(fb.x(i, j) == doctest::Approx(brute_energy(frames.data, j, params.mu[i], 11)).epsilon(1e-12));
    }
  }
}

TEST_CASE("filterbank_forward argmax tracks a pure sinusoid") {
  FilterbankParams params{Vector(3), 33};
  params.mu << 0.05, 0.2, 0.4;
  for (int p = 0; p < 3; ++p) {
    Eigen::MatrixXd data(128, 5);
    for (int j = 0; j < 5; ++j) {
      for (int m = 0; m < 128; ++m) data(m, j) = std::sin(2.0 * kPi * params.mu[p] * (m + 37 * j) + 0.3);
    }
    const FrameBlock frames = block_of(data);
    const Matrix x = filterbank_forward(frames, params).x;
    for (int j = 0; j < 5; ++j) {
      Eigen::Index arg = -1;
      x.col(j).maxCoeff(&arg);
      CHECK(arg == p);
      for (int i = 0; i < 3; ++i) {
        CHECK(x(i, j) == doctest::Approx(brute_energy(data, j, params.mu[i], 33)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("filterbank_forward zero input, scaling and time reversal") {
  FilterbankParams params = mel_init(6, 16000, 0.01, 0.45, 17);
  const Matrix zeros = filterbank_forward(block_of(Eigen::MatrixXd::Zero(40, 3)), params).x;
  CHECK((zeros.array() == std::log(1e-10)).all());

  std::mt19937_64 rng(4);
  const Eigen::MatrixXd data = random_matrix(rng, 40, 3);
  const Matrix base = filterbank_forward(block_of(data), params).x;
  const Matrix loud = filterbank_forward(block_of(3.0 * data), params).x;
  CHECK(((loud - base).array() - 2.0 * std::log(3.0)).abs().maxCoeff() < 1e-8);

  const Matrix reversed = filterbank_forward(block_of(data.colwise().reverse()), params).x;
  CHECK((reversed - base).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(filterbank_forward(block_of(Eigen::MatrixXd::Zero(16, 3)), params), ArgumentError);
}

TEST_CASE("filterbank_backward properties") {
  std::mt19937_64 rng(17);
  const FrameBlock frames = block_of(random_matrix(rng, 32, 3, 0.3));
  FilterbankParams params{Vector(3), 9};
  params.mu << 0.12, 0.3, 0.12;

  CHECK(filterbank_backward(frames, params, Matrix::Zero(3, 3)).isZero(0.0));

  Matrix up = random_matrix(rng, 3, 3);
  up.row(2) = up.row(0);
  const Vector g = filterbank_backward(frames, params, up);
  CHECK(g[0] == g[2]);

  // Finite differences of <upstream, forward>.
  up = random_matrix(rng, 3, 3);
  const Vector ga = filterbank_backward(frames, params, up);
  FilterbankTrace trace;
  filterbank_forward(frames, params, &trace);
  CHECK(filterbank_backward(frames, params, trace, up) == ga);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    FilterbankParams plus = params, minus = params;
    plus.mu[i] += h;
    minus.mu[i] -= h;
    const double fd = ((filterbank_forward(frames, plus).x.array() * up.array()).sum() -
                       (filterbank_forward(frames, minus).x.array() * up.array()).sum()) /
                      (2.0 * h);
    CHECK(relative_error(ga[i], fd) < 1e-5);
  }

  CHECK_THROWS_AS(filterbank_backward(frames, params, Matrix::Zero(2, 3)), ArgumentError);
}

TEST_CASE("filterbank_frames equals per-window forward bit for bit") {
  std::mt19937_64 rng(8);
  Utterance u;
  std::normal_distribution<double> normal(0.0, 0.1);
  u.samples.resize(3000);
  for (double& s : u.samples) s = normal(rng);
  const FilterbankParams params = mel_init(8, 16000, 0.01, 0.45, 33);
  const Matrix all = filterbank_frames(u, params, 200, 80);
  const auto blocks = frame_signal(u, 200, 7, 80);
  REQUIRE(!blocks.empty());
  CHECK(all.cols() == static_cast<Eigen::Index>((3000 - 200) / 80 + 1));
  for (std::size_t p = 0; p < blocks.size(); ++p) {
    const Matrix x = filterbank_forward(blocks[p], params).x;
    REQUIRE(x == all.middleCols(static_cast<Eigen::Index>(p), 7));
  }
}

TEST_CASE("mu csv round trip") {
  rawatt::testing::TempDir dir("mu");
  const std::vector<double> mu{0.00375, 0.123456789012345678, 0.475};
  write_mu_csv(dir / "mu.csv", mu);
  CHECK(read_mu_csv(dir / "mu.csv") == mu);
  CHECK_THROWS(read_mu_csv(dir / "missing.csv"));
}
