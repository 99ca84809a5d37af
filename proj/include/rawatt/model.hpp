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
#include <span>
#include <vector>

#include "rawatt/types.hpp"

namespace rawatt {

struct DenseLayer {
  Matrix w;  // out x in
  Vector b;  // out
};

/// Dense classifier head: ReLU after every layer except the last.
struct HeadParams {
  std::vector<DenseLayer> layers;

  /// He-normal weights, zero biases. widths excludes input and output sizes.
  static HeadParams init(int inputs, const std::vector<int>& widths, int classes,
                         std::uint64_t seed);
  static HeadParams zeros(int inputs, const std::vector<int>& widths, int classes);

  int inputs() const { return layers.empty() ? 0 : static_cast<int>(layers.front().w.cols()); }
  int classes() const { return layers.empty() ? 0 : static_cast<int>(layers.back().w.rows()); }
};

struct HeadTrace {
  std::vector<Vector> inputs;  // input to each layer
  std::vector<Vector> pre;     // pre-activation of each layer
};

/// Logits for a flattened (band-major) input.
Vector head_forward(const Matrix& z, const HeadParams& m, HeadTrace* trace = nullptr);

struct HeadGrads {
  HeadParams dparams;
  Matrix dz;
};

HeadGrads head_backward(const Matrix& z, const HeadParams& m, const HeadTrace& trace,
                        const Vector& dlogits);

struct CrossEntropy {
  double loss = 0.0;
  Vector grad;  // softmax(logits) - onehot(target)
};

/// -log softmax(logits)[target] with max subtraction.
CrossEntropy cross_entropy(const Vector& logits, int target);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptState {
  AdamHyper hyper;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit OptState(std::size_t n = 0, AdamHyper h = {}) : hyper(h), m(n, 0.0), v(n, 0.0) {}
};

/// Box constraint applied to a contiguous parameter range after an update.
struct ClampRange {
  std::size_t offset = 0;
  std::size_t count = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// One bias-corrected Adam update in place. Ranges in `frozen` keep their
/// values and moments. Throws TrainingError naming the first non-finite
/// gradient index; nothing is modified in that case.
void adam_step(std::span<double> params, std::span<const double> grads, OptState& state,
               std::span<const ClampRange> clamps = {},
               std::span<const ClampRange> frozen = {});

}  // namespace rawatt
