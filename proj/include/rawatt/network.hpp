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
#include <string>
#include <vector>

#include "rawatt/attention.hpp"
#include "rawatt/config.hpp"
#include "rawatt/filterbank.hpp"
#include "rawatt/model.hpp"

namespace rawatt {

/// Filterbank, attention and classifier head trained as one model.
struct Network {
  TrainConfig cfg;
  FilterbankParams fb;
  NinParams nin;
  HeadParams head;

  /// Mel-initialized mu, NIN starting at uniform attention, He-initialized head.
  static Network init(const TrainConfig& cfg);
};

/// Where each parameter tensor lives in the flattened vector.
struct ParamEntry {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

/// Order: mu, nin.w1, nin.b1, nin.w2, nin.b2, head.<l>.w, head.<l>.b ...
std::vector<ParamEntry> param_layout(const Network& net);
std::vector<double> flatten(const Network& net);
void unflatten(std::span<const double> flat, Network& net);

/// Forward pass of one window from its log energies onwards.
struct WindowForward {
  AttentionOutput att;
  HeadTrace head;
  Vector logits;
};

WindowForward forward_features(const Network& net, const Matrix& x);

/// Full forward/backward for one labeled window. Adds the gradient of the
/// cross-entropy loss to `grad` (laid out as param_layout) and returns the
/// loss. mu gradients are skipped when cfg.freeze_mu is set.
double accumulate_window_gradient(const Network& net, const FrameBlock& frames, int label,
                                  std::span<double> grad, Vector* logits = nullptr);

/// Binary checkpoint: "WFCK", u64 length + config JSON, u64 length + manifest
/// JSON [{name, shape, offset}], u64 count + little-endian float64 values.
void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace rawatt
