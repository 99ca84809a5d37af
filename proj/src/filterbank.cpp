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

#include "rawatt/filterbank.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "rawatt/error.hpp"

namespace rawatt {
namespace {

void check_kernel_args(double mu, int k) {
  if (k <= 0 || k % 2 == 0) {
    throw ArgumentError("kernel length k must be a positive odd number, got " + std::to_string(k));
  }
  if (!(mu > 0.0 && mu < 0.5)) {
    std::ostringstream msg;
    msg << "center frequency mu = " << mu << " outside (0, 0.5) cycles/sample";
    throw DomainError(msg.str());
  }
}

// Row m of the result holds frame[m .. m + k).
Matrix toeplitz(const double* frame, int s, int k) {
  const int len = s - k + 1;
  Matrix out(len, k);
  for (int m = 0; m < len; ++m) {
    for (int q = 0; q < k; ++q) out(m, q) = frame[m + q];
  }
  return out;
}

// Filters one frame with every kernel; returns the valid outputs and writes
// the per-band mean energy into `energy`.
Matrix convolve_frame(const double* frame, int s, const Matrix& kernels,
                      Eigen::Ref<Vector> energy) {
  const int k = static_cast<int>(kernels.rows());
  const Matrix taps = toeplitz(frame, s, k);
  Matrix conv = taps * kernels;
  const double inv_len = 1.0 / static_cast<double>(conv.rows());
  for (Eigen::Index i = 0; i < conv.cols(); ++i) energy[i] = conv.col(i).squaredNorm() * inv_len;
  return conv;
}

void check_frame_length(int s, int k) {
  if (s < k) {
    throw ArgumentError("filterbank: frame of " + std::to_string(s) +
                        " samples is shorter than the kernel (" + std::to_string(k) + " taps)");
  }
}

}  // namespace

Vector make_kernel(double mu, int k) {
  check_kernel_args(mu, k);
  const int half = (k - 1) / 2;
  Vector w(k);
  for (int q = 0; q < k; ++q) {
    const double n = q - half;
    w[q] = std::cos(2.0 * std::numbers::pi * mu * n) * std::exp(-n * n * mu * mu / 2.0);
  }
  return w;
}

Vector kernel_grad_mu(double mu, int k) {
  check_kernel_args(mu, k);
  const int half = (k - 1) / 2;
  Vector g(k);
  for (int q = 0; q < k; ++q) {
    const double n = q - half;
    const double phase = 2.0 * std::numbers::pi * mu * n;
    const double env = std::exp(-n * n * mu * mu / 2.0);
    g[q] = -2.0 * std::numbers::pi * n * std::sin(phase) * env - n * n * mu * std::cos(phase) * env;
  }
  return g;
}

FilterbankParams mel_init(int f, int sample_rate, double mu_min, double mu_max, int k) {
  if (f < 2) throw ArgumentError("mel_init: need at least 2 bands");
  if (!(mu_min > 0.0 && mu_min < mu_max && mu_max < 0.5)) {
    throw ArgumentError("mel_init: require 0 < mu_min < mu_max < 0.5");
  }
  const double lo = hz_to_mel(mu_min * sample_rate);
  const double hi = hz_to_mel(mu_max * sample_rate);
  FilterbankParams p;
  p.k = k;
  p.mu.resize(f);
  for (int i = 0; i < f; ++i) {
    p.mu[i] = mel_to_hz(lo + (hi - lo) * i / (f - 1)) / sample_rate;
  }
  // Pin the endpoints against round-off in the mel round trip.
  p.mu[0] = mu_min;
  p.mu[f - 1] = mu_max;
  return p;
}

Matrix kernel_matrix(const FilterbankParams& params) {
  Matrix kernels(params.k, params.bands());
  for (int i = 0; i < params.bands(); ++i) kernels.col(i) = make_kernel(params.mu[i], params.k);
  return kernels;
}

FeatureBlock filterbank_forward(const FrameBlock& frames, const FilterbankParams& params,
                                FilterbankTrace* trace) {
  const int s = frames.samples_per_frame();
  const int t = frames.frames();
  check_frame_length(s, params.k);
  const Matrix kernels = kernel_matrix(params);

  Matrix energy(params.bands(), t);
  Vector e(params.bands());
  if (trace) trace->conv.clear();
  for (int j = 0; j < t; ++j) {
    Matrix conv = convolve_frame(frames.data.col(j).data(), s, kernels, e);
    energy.col(j) = e;
    if (trace) trace->conv.push_back(std::move(conv));
  }
  FeatureBlock out;
  out.window_index = frames.window_index;
  out.x = (energy.array() + kLogFloor).log().matrix();
  if (trace) trace->energy = std::move(energy);
  return out;
}

Vector filterbank_backward(const FrameBlock& frames, const FilterbankParams& params,
                           const Matrix& upstream) {
  FilterbankTrace trace;
  filterbank_forward(frames, params, &trace);
  return filterbank_backward(frames, params, trace, upstream);
}

Vector filterbank_backward(const FrameBlock& frames, const FilterbankParams& params,
                           const FilterbankTrace& trace, const Matrix& upstream) {
  const int s = frames.samples_per_frame();
  const int t = frames.frames();
  const int f = params.bands();
  check_frame_length(s, params.k);
  if (upstream.rows() != f || upstream.cols() != t ||
      trace.energy.rows() != f || trace.energy.cols() != t ||
      static_cast<int>(trace.conv.size()) != t) {
    throw ArgumentError("filterbank_backward: upstream/trace shape does not match " +
                        std::to_string(f) + "x" + std::to_string(t));
  }
  const double scale = 2.0 / static_cast<double>(s - params.k + 1);

  // d/dtaps accumulated over frames, then chained through dw/dmu.
  Matrix tap_grad = Matrix::Zero(params.k, f);
  for (int j = 0; j < t; ++j) {
    const Vector coeff =
        (upstream.col(j).array() / (trace.energy.col(j).array() + kLogFloor) * scale).matrix();
    if (coeff.isZero(0.0)) continue;
    const Matrix weighted = trace.conv[j] * coeff.asDiagonal();
    tap_grad.noalias() += toeplitz(frames.data.col(j).data(), s, params.k).transpose() * weighted;
  }
  Vector grad(f);
  for (int i = 0; i < f; ++i) grad[i] = tap_grad.col(i).dot(kernel_grad_mu(params.mu[i], params.k));
  return grad;
}

Matrix filterbank_frames(const Utterance& u, const FilterbankParams& params, int s, int shift) {
  check_frame_length(s, params.k);
  if (shift <= 0) throw ArgumentError("filterbank_frames: shift must be positive");
  const std::size_t n = u.samples.size();
  const Eigen::Index frames = n < static_cast<std::size_t>(s)
                                  ? 0
                                  : static_cast<Eigen::Index>((n - s) / shift + 1);
  const Matrix kernels = kernel_matrix(params);
  Matrix energy(params.bands(), frames);
  Vector e(params.bands());
  for (Eigen::Index j = 0; j < frames; ++j) {
    convolve_frame(u.samples.data() + j * shift, s, kernels, e);
    energy.col(j) = e;
  }
  return (energy.array() + kLogFloor).log().matrix();
}

std::vector<double> read_mu_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mu file " + path.string());
  std::vector<double> mu;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    try {
      std::size_t used = 0;
      mu.push_back(std::stod(line.substr(first), &used));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return mu;
}

void write_mu_csv(const std::filesystem::path& path, std::span<const double> mu) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double m : mu) out << m << '\n';
}

}  // namespace rawatt
