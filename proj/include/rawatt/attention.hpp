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

#pragma once

#include <cstdint>

#include "rawatt/types.hpp"

namespace rawatt {

/// Two-layer network-in-network producing one attention weight per band.
///
/// logits = W2 relu(W1 vec(x) + b1) + b2, vec() flattening x band-major.
struct NinParams {
  Matrix w1;  // h x (f*t)
  Vector b1;  // h
  Matrix w2;  // f x h
  Vector b2;  // f

  int hidden() const { return static_cast<int>(w1.rows()); }
  int bands() const { return static_cast<int>(w2.rows()); }

  static NinParams zeros(int f, int t, int h);
  /// He-normal first layer, zero output layer: starts from uniform attention.
  static NinParams init(int f, int t, int h, std::uint64_t seed);
};

/// Hidden state of one NIN evaluation.
struct NinTrace {
  Vector pre;     // W1 vec(x) + b1
  Vector hidden;  // relu(pre)
  Vector logits;
};

/// Softmax attention weights, one per band (rows of x).
Vector nin_forward(const Matrix& x, const NinParams& p, NinTrace* trace = nullptr);

/// y[i][j] = w[i] x[i][j]. Throws ArgumentError unless w sums to 1 within 1e-6.
Matrix apply_attention(const Matrix& x, const Vector& w);

/// Per-band statistics over frames, population normalization.
struct SoftNormStats {
  Vector mean;
  Vector sigma;
};

/// z[i][j] = (y[i][j] - m_i) / sqrt(sigma_i^2 + c).
/// Throws DegenerateInputError when c = 0 and some row is constant.
Matrix soft_attention_norm(const Matrix& y, double c, SoftNormStats* stats = nullptr);

/// Keeps the t_keep central columns. Both counts must be odd, t_keep <= t.
Matrix prune_center(const Matrix& z, int t_keep);

/// Everything one attention pass produces.
struct AttentionOutput {
  Vector w;
  Matrix y;
  Matrix z_full;  // f x t, before pruning
  Matrix z;       // f x t_keep
  SoftNormStats stats;
  NinTrace nin;
  bool uniform = false;
};

/// nin_forward -> apply_attention -> soft_attention_norm -> prune_center.
AttentionOutput attention_forward(const Matrix& x, const NinParams& p, double c, int t_keep);

/// Fixed w = 1/f; the NIN is bypassed.
AttentionOutput attention_forward_uniform(const Matrix& x, double c, int t_keep);

struct AttentionGrads {
  Matrix dx;
  NinParams dnin;
};

/// Reverse pass of attention_forward for an f x t_keep upstream gradient.
/// dx includes the direct path through y and the path through the NIN.
AttentionGrads attention_backward(const Matrix& x, const NinParams& p, double c, int t_keep,
                                  const Matrix& upstream);

/// Same, reusing the forward output. A uniform forward yields zero NIN grads.
AttentionGrads attention_backward(const Matrix& x, const NinParams& p, double c,
                                  const AttentionOutput& fwd, const Matrix& upstream);

}  // namespace rawatt
