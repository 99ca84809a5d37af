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

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "rawatt/dataset.hpp"
#include "rawatt/network.hpp"

namespace rawatt {

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's training windows
  double best_loss = 0.0;   // best train_loss so far
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;  // utterance-level; NaN without a validation split
  std::vector<double> mu;
  std::vector<double> attention;  // mean weights over validation windows
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  std::size_t train_utterances = 0;
  std::size_t train_windows = 0;
};

struct TrainOptions {
  std::optional<std::vector<double>> mu_init;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  Network net;
  RunMetrics metrics;
};

/// Minibatch Adam over mu, NIN and head. Each training utterance contributes
/// cfg.windows_per_utterance evenly spaced context windows labeled with its
/// class. cfg.label_fraction < 1 first applies subset_labels. Deterministic
/// given (data, cfg). Throws TrainingError on a non-finite loss.
TrainResult train(const Dataset& data, TrainConfig cfg, const TrainOptions& options = {});

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  std::size_t utterances = 0;
  std::vector<double> mean_attention;  // per band, over all evaluated windows
};

/// Per-window argmax, then a majority vote per utterance (ties go to the
/// lower class index). Only items of `split` are used when given.
EvalResult evaluate(const Network& net, const Dataset& data,
                    std::optional<Split> split = std::nullopt);

/// Window-level predicted class for every context window of an utterance.
std::vector<int> classify_windows(const Network& net, const Utterance& u);

void write_metrics_jsonl(const std::filesystem::path& path, const RunMetrics& metrics);
void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& metrics);

}  // namespace rawatt
