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

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "rawatt/signal.hpp"
#include "rawatt/types.hpp"

namespace rawatt {

/// Learnable center frequencies of a cosine-modulated Gaussian filterbank.
///
/// Frequencies are normalized (cycles/sample); the Gaussian width of filter i
/// is 1 / mu[i] samples and is never stored.
struct FilterbankParams {
  Vector mu;
  int k = 129;  // taps per kernel, odd

  int bands() const { return static_cast<int>(mu.size()); }
};

/// Log sub-band energies of one context window, f x t.
struct FeatureBlock {
  Matrix x;
  std::size_t window_index = 0;
};

/// Kernel taps cos(2 pi mu n) exp(-n^2 mu^2 / 2) at n = -(k-1)/2 .. (k-1)/2.
/// Throws DomainError unless 0 < mu < 0.5, ArgumentError for even or
/// non-positive k.
Vector make_kernel(double mu, int k);

/// Derivative of make_kernel with respect to mu, tap by tap.
Vector kernel_grad_mu(double mu, int k);

/// Center frequencies equally spaced on the mel scale between mu_min and
/// mu_max (both in cycles/sample) for a given sample rate.
FilterbankParams mel_init(int f, int sample_rate, double mu_min, double mu_max, int k = 129);

/// k x f matrix whose column i is make_kernel(mu[i], k).
Matrix kernel_matrix(const FilterbankParams& params);

/// Per-frame intermediate values kept for the backward pass.
struct FilterbankTrace {
  std::vector<Matrix> conv;  // per frame: (s-k+1) x f valid-mode filter outputs
  Matrix energy;             // f x t mean squared outputs (before the log)
};

/// x[i][j] = ln(mean_m (w_i * frame_j)[m]^2 + eps), valid-mode convolution.
/// Throws ArgumentError if the frame is shorter than the kernel.
FeatureBlock filterbank_forward(const FrameBlock& frames, const FilterbankParams& params,
                                FilterbankTrace* trace = nullptr);

/// Gradient with respect to mu of <upstream, filterbank_forward(frames, params).x>.
Vector filterbank_backward(const FrameBlock& frames, const FilterbankParams& params,
                           const Matrix& upstream);

/// Same, reusing a trace recorded by filterbank_forward on the same inputs.
Vector filterbank_backward(const FrameBlock& frames, const FilterbankParams& params,
                           const FilterbankTrace& trace, const Matrix& upstream);

/// Log energies of every frame of an utterance (f x n_frames), frame j starting
/// at sample j * shift. Column p + j equals column j of filterbank_forward on
/// window p bit for bit, so windows can be sliced out without recomputation.
Matrix filterbank_frames(const Utterance& u, const FilterbankParams& params, int s, int shift);

/// mu-vector file: one normalized frequency per line.
std::vector<double> read_mu_csv(const std::filesystem::path& path);
void write_mu_csv(const std::filesystem::path& path, std::span<const double> mu);

}  // namespace rawatt
