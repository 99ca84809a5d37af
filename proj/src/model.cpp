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

#include "rawatt/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rawatt/error.hpp"

namespace rawatt {
namespace {

std::vector<int> layer_sizes(int inputs, const std::vector<int>& widths, int classes) {
  std::vector<int> sizes{inputs};
  sizes.insert(sizes.end(), widths.begin(), widths.end());
  sizes.push_back(classes);
  for (int n : sizes) {
    if (n <= 0) throw ArgumentError("head: layer widths must be positive");
  }
  return sizes;
}

bool in_ranges(std::size_t i, std::span<const ClampRange> ranges) {
  return std::any_of(ranges.begin(), ranges.end(), [i](const ClampRange& r) {
    return i >= r.offset && i < r.offset + r.count;
  });
}

}  // namespace

HeadParams HeadParams::zeros(int inputs, const std::vector<int>& widths, int classes) {
  const auto sizes = layer_sizes(inputs, widths, classes);
  HeadParams p;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    p.layers.push_back({Matrix::Zero(sizes[l + 1], sizes[l]), Vector::Zero(sizes[l + 1])});
  }
  return p;
}

HeadParams HeadParams::init(int inputs, const std::vector<int>& widths, int classes,
                            std::uint64_t seed) {
  HeadParams p = zeros(inputs, widths, classes);
  std::mt19937_64 rng(seed);
  for (auto& layer : p.layers) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / layer.w.cols()));
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = normal(rng);
  }
  return p;
}

Vector head_forward(const Matrix& z, const HeadParams& m, HeadTrace* trace) {
  if (m.layers.empty() || m.inputs() != z.size()) {
    throw ArgumentError("head_forward: input of " + std::to_string(z.size()) +
                        " values does not match head input width " + std::to_string(m.inputs()));
  }
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  Vector a = Eigen::Map<const Vector>(z.data(), z.size());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    if (layer.w.cols() != a.size() || layer.b.size() != layer.w.rows()) {
      throw ArgumentError("head_forward: layer " + std::to_string(l) + " shape mismatch");
    }
    Vector pre = layer.w * a + layer.b;
    if (trace) {
      trace->inputs.push_back(a);
      trace->pre.push_back(pre);
    }
    a = (l + 1 < m.layers.size()) ? Vector(pre.cwiseMax(0.0)) : std::move(pre);
  }
  return a;
}

HeadGrads head_backward(const Matrix& z, const HeadParams& m, const HeadTrace& trace,
                        const Vector& dlogits) {
  if (trace.inputs.size() != m.layers.size() || dlogits.size() != m.classes()) {
    throw ArgumentError("head_backward: trace or gradient does not match the head");
  }
  HeadGrads g;
  g.dparams.layers.resize(m.layers.size());
  Vector delta = dlogits;
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    if (l + 1 < m.layers.size()) {
      delta = (trace.pre[l].array() > 0.0).select(delta.array(), 0.0).matrix();
    }
    g.dparams.layers[l].w = delta * trace.inputs[l].transpose();
    g.dparams.layers[l].b = delta;
    delta = m.layers[l].w.transpose() * delta;
  }
  g.dz = Eigen::Map<const Matrix>(delta.data(), z.rows(), z.cols());
  return g;
}

CrossEntropy cross_entropy(const Vector& logits, int target) {
  if (target < 0 || target >= logits.size()) {
    throw ArgumentError("cross_entropy: target " + std::to_string(target) + " outside [0, " +
                        std::to_string(logits.size()) + ")");
  }
  const double top = logits.maxCoeff();
  const Vector e = (logits.array() - top).exp().matrix();
  const double total = e.sum();
  CrossEntropy out;
  out.loss = std::log(total) - (logits[target] - top);
  out.grad = e / total;
  out.grad[target] -= 1.0;
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, OptState& state,
               std::span<const ClampRange> clamps, std::span<const ClampRange> frozen) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ArgumentError("adam_step: parameter, gradient and state sizes differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw TrainingError("adam_step: non-finite gradient at parameter index " +
                          std::to_string(i));
    }
  }
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!frozen.empty() && in_ranges(i, frozen)) continue;
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grads[i];
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
  }
  for (const auto& r : clamps) {
    for (std::size_t i = r.offset; i < r.offset + r.count; ++i) {
      params[i] = std::clamp(params[i], r.lo, r.hi);
    }
  }
}

}  // namespace rawatt
