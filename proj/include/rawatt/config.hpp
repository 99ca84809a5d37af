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
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace rawatt {

/// Training configuration. Serialized as a flat JSON object with these field
/// names; defaults are the full-size front-end (f=80, k=129, s=400, t=101).
struct TrainConfig {
  int sample_rate = 16000;
  int f = 80;
  int k = 129;
  int s = 400;
  int t = 101;
  int t_keep = 21;
  int shift = 160;
  int h = 128;
  double c = 0.01;
  std::vector<int> head_widths{256, 64};
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double label_fraction = 1.0;
  double mu_min = 0.00375;  // 60 Hz at 16 kHz
  double mu_max = 0.475;    // 7600 Hz at 16 kHz
  bool freeze_mu = false;
  bool uniform_attention = false;
  int windows_per_utterance = 1;
  int num_classes = 0;  // filled from the dataset when training starts

  /// Throws ArgumentError describing the first violated constraint.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults; unknown keys are an error.
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::filesystem::path& path);

}  // namespace rawatt
