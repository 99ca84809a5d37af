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

#include "rawatt/attention.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rawatt/error.hpp"

namespace rawatt {
namespace {

std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

Eigen::Map<const Vector> flat(const Matrix& x) { return {x.data(), x.size()}; }

void check_nin_shapes(const Matrix& x, const NinParams& p) {
  if (p.w1.cols() != x.size() || p.b1.size() != p.w1.rows() || p.w2.cols() != p.w1.rows() ||
      p.b2.size() != p.w2.rows() || p.w2.rows() != x.rows()) {
    throw ArgumentError("NIN parameter shapes (W1 " + shape(p.w1.rows(), p.w1.cols()) + ", W2 " +
                        shape(p.w2.rows(), p.w2.cols()) + ") do not match input " +
                        shape(x.rows(), x.cols()));
  }
}

Vector softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

void check_prune(Eigen::Index t, int t_keep) {
  if (t_keep <= 0 || t_keep > t || t_keep % 2 == 0 || t % 2 == 0) {
    throw ArgumentError("prune_center: need odd t_keep <= odd t, got t_keep=" +
                        std::to_string(t_keep) + ", t=" + std::to_string(t));
  }
}

AttentionOutput finish_forward(const Matrix& x, Vector w, double c, int t_keep) {
  AttentionOutput out;
  out.w = std::move(w);
  out.y = apply_attention(x, out.w);
  out.z_full = soft_attention_norm(out.y, c, &out.stats);
  out.z = prune_center(out.z_full, t_keep);
  return out;
}

}  // namespace

NinParams NinParams::zeros(int f, int t, int h) {
  return {Matrix::Zero(h, f * t), Vector::Zero(h), Matrix::Zero(f, h), Vector::Zero(f)};
}

NinParams NinParams::init(int f, int t, int h, std::uint64_t seed) {
  NinParams p = zeros(f, t, h);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (f * t)));
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = normal(rng);
  return p;
}

Vector nin_forward(const Matrix& x, const NinParams& p, NinTrace* trace) {
  check_nin_shapes(x, p);
  NinTrace local;
  NinTrace& tr = trace ? *trace : local;
  tr.pre = p.w1 * flat(x) + p.b1;
  tr.hidden = tr.pre.cwiseMax(0.0);
  tr.logits = p.w2 * tr.hidden + p.b2;
  return softmax(tr.logits);
}

Matrix apply_attention(const Matrix& x, const Vector& w) {
  if (w.size() != x.rows()) {
    throw ArgumentError("apply_attention: " + std::to_string(w.size()) + " weights for " +
                        std::to_string(x.rows()) + " bands");
  }
  if (std::abs(w.sum() - 1.0) > 1e-6) {
    throw ArgumentError("apply_attention: weights must sum to 1");
  }
  return w.asDiagonal() * x;
}

Matrix soft_attention_norm(const Matrix& y, double c, SoftNormStats* stats) {
  if (y.cols() < 2) throw ArgumentError("soft_attention_norm: need at least 2 frames");
  if (!(c >= 0.0)) throw ArgumentError("soft_attention_norm: c must be non-negative");
  const double inv_t = 1.0 / static_cast<double>(y.cols());
  const Vector mean = y.rowwise().sum() * inv_t;
  const Matrix centered = y.colwise() - mean;
  const Vector var = centered.rowwise().squaredNorm() * inv_t;
  Matrix z(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double denom = var[i] + c;
    if (denom == 0.0) {  // NaN falls through and surfaces as a non-finite loss
      throw DegenerateInputError("soft_attention_norm: band " + std::to_string(i) +
                                 " is constant over frames and c = 0");
    }
    z.row(i) = centered.row(i) / std::sqrt(denom);
  }
  if (stats) {
    stats->mean = mean;
    stats->sigma = var.cwiseSqrt();
  }
  return z;
}

Matrix prune_center(const Matrix& z, int t_keep) {
  check_prune(z.cols(), t_keep);
  return z.middleCols((z.cols() - t_keep) / 2, t_keep);
}

AttentionOutput attention_forward(const Matrix& x, const NinParams& p, double c, int t_keep) {
  NinTrace trace;
  Vector w = nin_forward(x, p, &trace);
  AttentionOutput out = finish_forward(x, std::move(w), c, t_keep);
  out.nin = std::move(trace);
  return out;
}

AttentionOutput attention_forward_uniform(const Matrix& x, double c, int t_keep) {
  AttentionOutput out =
      finish_forward(x, Vector::Constant(x.rows(), 1.0 / static_cast<double>(x.rows())), c, t_keep);
  out.uniform = true;
  return out;
}

AttentionGrads attention_backward(const Matrix& x, const NinParams& p, double c, int t_keep,
                                  const Matrix& upstream) {
  return attention_backward(x, p, c, attention_forward(x, p, c, t_keep), upstream);
}

AttentionGrads attention_backward(const Matrix& x, const NinParams& p, double c,
                                  const AttentionOutput& fwd, const Matrix& upstream) {
  const Eigen::Index f = x.rows(), t = x.cols();
  const Eigen::Index keep = fwd.z.cols();
  if (upstream.rows() != f || upstream.cols() != keep || fwd.y.rows() != f || fwd.y.cols() != t) {
    throw ArgumentError("attention_backward: upstream " + shape(upstream.rows(), upstream.cols()) +
                        " does not match forward output " + shape(f, keep));
  }

  // Pruning: gradient is zero on the discarded frames.
  Matrix gz = Matrix::Zero(f, t);
  gz.middleCols((t - keep) / 2, keep) = upstream;

  // Soft normalization, row by row; mean and variance both depend on y.
  const double inv_t = 1.0 / static_cast<double>(t);
  Matrix gy(f, t);
  for (Eigen::Index i = 0; i < f; ++i) {
    const auto yrow = fwd.y.row(i);
    const auto grow = gz.row(i);
    const double m = fwd.stats.mean[i];
    const double var = fwd.stats.sigma[i] * fwd.stats.sigma[i];
    const double d = std::sqrt(var + c);
    const double gbar = grow.sum() * inv_t;
    const double gdot = (grow.array() * (yrow.array() - m)).sum();
    gy.row(i) = ((grow.array() - gbar) - (yrow.array() - m) * gdot * inv_t / (d * d)) / d;
  }

  AttentionGrads g;
  g.dx = fwd.w.asDiagonal() * gy;
  if (fwd.uniform) {
    g.dnin = {Matrix::Zero(p.w1.rows(), p.w1.cols()), Vector::Zero(p.b1.size()),
              Matrix::Zero(p.w2.rows(), p.w2.cols()), Vector::Zero(p.b2.size())};
    return g;
  }

  check_nin_shapes(x, p);
  const Vector gw = (gy.array() * x.array()).rowwise().sum();
  const Vector glogits = (fwd.w.array() * (gw.array() - gw.dot(fwd.w))).matrix();
  const Vector ghidden = p.w2.transpose() * glogits;
  const Vector gpre = (fwd.nin.pre.array() > 0.0).select(ghidden.array(), 0.0).matrix();

  g.dnin.w2 = glogits * fwd.nin.hidden.transpose();
  g.dnin.b2 = glogits;
  g.dnin.w1 = gpre * flat(x).transpose();
  g.dnin.b1 = gpre;
  const Vector gflat = p.w1.transpose() * gpre;
  g.dx += Eigen::Map<const Matrix>(gflat.data(), f, t);
  return g;
}

}  // namespace rawatt
