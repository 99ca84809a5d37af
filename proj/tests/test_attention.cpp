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
#include <random>

#include <doctest.h>

#include "rawatt/attention.hpp"
#include "rawatt/error.hpp"
#include "rawatt/gradcheck.hpp"
#include "test_util.hpp"

using namespace rawatt;
using rawatt::testing::random_matrix;

namespace {

double row_var(const Matrix& m, Eigen::Index r) {
  const double mean = m.row(r).mean();
  return (m.row(r).array() - mean).square().mean();
}

NinParams random_nin(std::mt19937_64& rng, int f, int t, int h) {
  return {random_matrix(rng, h, f * t, 0.5), random_matrix(rng, h, 1, 0.5).col(0),
          random_matrix(rng, f, h, 0.5), random_matrix(rng, f, 1, 0.5).col(0)};
}

}  // namespace

TEST_CASE("nin_forward softmax contracts") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(rng, 4, 5);
  const Vector w0 = nin_forward(x, NinParams::zeros(4, 5, 6));
  CHECK((w0.array() == 0.25).all());
  // Initial parameters also start uniform.
  CHECK((nin_forward(x, NinParams::init(4, 5, 6, 3)).array() - 0.25).abs().maxCoeff() < 1e-15);

  NinParams p = random_nin(rng, 4, 5, 6);
  const Vector w = nin_forward(x, p);
  CHECK((w.array() >= 0.0).all());
  CHECK(std::abs(w.sum() - 1.0) < 1e-12);
  p.b2.array() += 7.5;
  CHECK((nin_forward(x, p) - w).cwiseAbs().maxCoeff() < 1e-12);

  // Hand-set logits (ln 3, 0).
  NinParams two = NinParams::zeros(2, 1, 1);
  two.b2 << std::log(3.0), 0.0;
  const Vector w2 = nin_forward(Matrix::Zero(2, 1), two);
  CHECK(w2[0] == doctest::Approx(0.75));
  CHECK(w2[1] == doctest::Approx(0.25));

  // Flattening is band-major: the weight on vec index i*t + j reads x(i, j).
  NinParams probe = NinParams::zeros(2, 3, 1);
  probe.w1(0, 1 * 3 + 2) = 1.0;
  probe.w2(0, 0) = 1.0;
  Matrix xp = Matrix::Zero(2, 3);
  xp(1, 2) = std::log(3.0);
  NinTrace trace;
  const Vector wp = nin_forward(xp, probe, &trace);
  CHECK(trace.pre[0] == doctest::Approx(std::log(3.0)));
  CHECK(wp[0] == doctest::Approx(0.75));

  CHECK_THROWS_AS(nin_forward(random_matrix(rng, 3, 5), p), ArgumentError);
}

TEST_CASE("apply_attention examples") {
  Matrix x(2, 2);
  x << 1, 1, 2, 2;
  Vector w(2);
  w << 0.75, 0.25;
  const Matrix y = apply_attention(x, w);
  CHECK(y(0, 0) == 0.75);
  CHECK(y(0, 1) == 0.75);
  CHECK(y(1, 0) == 0.5);
  CHECK(y(1, 1) == 0.5);

  std::mt19937_64 rng(2);
  const Matrix xr = random_matrix(rng, 5, 7);
  CHECK((apply_attention(xr, Vector::Constant(5, 0.2)) - xr / 5.0).cwiseAbs().maxCoeff() < 1e-15);
  Vector onehot = Vector::Zero(5);
  onehot[3] = 1.0;
  const Matrix sel = apply_attention(xr, onehot);
  CHECK(sel.row(3) == xr.row(3));
  CHECK(sel.topRows(3).isZero(0.0));
  CHECK(sel.row(4).isZero(0.0));

  CHECK_THROWS_AS(apply_attention(xr, Vector::Constant(5, 0.3)), ArgumentError);
}

TEST_CASE("soft_attention_norm variance modulation") {
  const double c = 0.01;
  std::mt19937_64 rng(3);
  for (double var : {c / 100.0, c, 100.0 * c}) {
    Matrix y = random_matrix(rng, 1, 51);
    y.array() -= y.mean();
    y *= std::sqrt(var / row_var(y, 0));
    y.array() += 4.0;
    const Matrix z = soft_attention_norm(y, c);
    CHECK(std::abs(z.row(0).mean()) < 1e-10);
    CHECK(std::abs(row_var(z, 0) - var / (var + c)) < 1e-10);
  }

  Matrix rows = random_matrix(rng, 3, 9);
  rows.row(1).setConstant(2.5);
  const Matrix z = soft_attention_norm(rows, 0.1);
  CHECK(z.row(1).isZero(0.0));

  const Matrix z0 = soft_attention_norm(random_matrix(rng, 4, 9), 0.0);
  for (int r = 0; r < 4; ++r) {
    CHECK(std::abs(z0.row(r).mean()) < 1e-12);
    CHECK(row_var(z0, r) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(soft_attention_norm(rows, 0.0), DegenerateInputError);

  SoftNormStats stats;
  soft_attention_norm(rows, 0.1, &stats);
  CHECK(stats.mean[1] == 2.5);
  CHECK(stats.sigma[1] == 0.0);
  CHECK(stats.sigma[0] == doctest::Approx(std::sqrt(row_var(rows, 0))));

  // Variance factor increases with the row variance.
  double prev = -1.0;
  for (double var = 1e-5; var < 10.0; var *= 3.0) {
    Matrix y(1, 2);
    y << -std::sqrt(var), std::sqrt(var);
    const double out = row_var(soft_attention_norm(y, c), 0);
    CHECK(out > prev);
    prev = out;
  }
}

TEST_CASE("prune_center keeps the central columns") {
  Matrix z(2, 101);
  for (int j = 0; j < 101; ++j) z.col(j).setConstant(j);
  const Matrix p = prune_center(z, 21);
  REQUIRE(p.cols() == 21);
  CHECK(p(0, 0) == 40.0);
  CHECK(p(1, 20) == 60.0);
  CHECK(prune_center(z, 101) == z);
  CHECK(prune_center(z.leftCols(5), 1)(0, 0) == 2.0);
  CHECK_THROWS_AS(prune_center(z, 20), ArgumentError);
  CHECK_THROWS_AS(prune_center(z, 103), ArgumentError);
  CHECK_THROWS_AS(prune_center(z.leftCols(100), 21), ArgumentError);
}

TEST_CASE("normalization happens before pruning") {
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(rng, 3, 9);
  const NinParams p = random_nin(rng, 3, 9, 4);
  const AttentionOutput out = attention_forward(x, p, 0.01, 3);
  const Matrix expect = prune_center(soft_attention_norm(apply_attention(x, out.w), 0.01), 3);
  CHECK(out.z == expect);
  const Matrix swapped = soft_attention_norm(prune_center(apply_attention(x, out.w), 3), 0.01);
  CHECK((swapped - expect).cwiseAbs().maxCoeff() > 1e-6);
  CHECK(out.z_full.cols() == 9);

  const AttentionOutput uni = attention_forward_uniform(x, 0.01, 3);
  CHECK(uni.uniform);
  CHECK((uni.w.array() == 1.0 / 3.0).all());
}

TEST_CASE("attention_backward matches finite differences") {
  std::mt19937_64 rng(5);
  const int f = 3, t = 5, h = 4, tk = 3;
  const double c = 0.01, step = 1e-6;
  Matrix x = random_matrix(rng, f, t);
  NinParams p = random_nin(rng, f, t, h);
  const Matrix up = random_matrix(rng, f, tk);
  const AttentionGrads g = attention_backward(x, p, c, tk, up);

  auto objective = [&]() { return (attention_forward(x, p, c, tk).z.array() * up.array()).sum(); };
  auto check_entries = [&](auto& target, const auto& grad) {
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      const double orig = target.data()[i];
      target.data()[i] = orig + step;
      const double a = objective();
      target.data()[i] = orig - step;
      const double b = objective();
      target.data()[i] = orig;
      REQUIRE(relative_error(grad.data()[i], (a - b) / (2.0 * step)) < 1e-5);
    }
  };
  check_entries(x, g.dx);
  check_entries(p.w1, g.dnin.w1);
  check_entries(p.b1, g.dnin.b1);
  check_entries(p.w2, g.dnin.w2);
  check_entries(p.b2, g.dnin.b2);

  const AttentionGrads zero = attention_backward(x, p, c, tk, Matrix::Zero(f, tk));
  CHECK(zero.dx.isZero(0.0));
  CHECK(zero.dnin.w1.isZero(0.0));
  CHECK(zero.dnin.b2.isZero(0.0));

  NinParams shifted = p;
  shifted.b2.array() += 3.0;
  const AttentionGrads gs = attention_backward(x, shifted, c, tk, up);
  CHECK((gs.dx - g.dx).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((gs.dnin.w1 - g.dnin.w1).cwiseAbs().maxCoeff() < 1e-10);

  const AttentionOutput uni = attention_forward_uniform(x, c, tk);
  const AttentionGrads gu = attention_backward(x, p, c, uni, up);
  CHECK(gu.dnin.w1.isZero(0.0));
  CHECK(gu.dnin.b2.isZero(0.0));

  CHECK_THROWS_AS(attention_backward(x, p, c, tk, Matrix::Zero(f, tk + 2)), ArgumentError);
}
