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

#include "rawatt/config.hpp"

#include <fstream>

#include "rawatt/error.hpp"

namespace rawatt {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError(std::string("config field '") + key + "': " + e.what());
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("invalid config: ") + what);
  };
  require(sample_rate > 0, "sample_rate must be positive");
  require(f >= 2, "f must be at least 2");
  require(k > 0 && k % 2 == 1, "k must be positive and odd");
  require(s >= k, "s must be at least k");
  require(t >= 3 && t % 2 == 1, "t must be odd and at least 3");
  require(t_keep > 0 && t_keep % 2 == 1 && t_keep <= t, "t_keep must be odd and <= t");
  require(shift > 0, "shift must be positive");
  require(h > 0, "h must be positive");
  require(c >= 0.0, "c must be non-negative");
  for (int w : head_widths) require(w > 0, "head_widths entries must be positive");
  require(lr >= 0.0, "lr must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must be in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
  require(epochs >= 0, "epochs must be non-negative");
  require(batch_size > 0, "batch_size must be positive");
  require(label_fraction > 0.0 && label_fraction <= 1.0, "label_fraction must be in (0, 1]");
  require(mu_min > 0.0 && mu_min < mu_max && mu_max < 0.5, "need 0 < mu_min < mu_max < 0.5");
  require(windows_per_utterance > 0, "windows_per_utterance must be positive");
  require(num_classes >= 0, "num_classes must be non-negative");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {
      {"sample_rate", cfg.sample_rate},
      {"f", cfg.f},
      {"k", cfg.k},
      {"s", cfg.s},
      {"t", cfg.t},
      {"t_keep", cfg.t_keep},
      {"shift", cfg.shift},
      {"h", cfg.h},
      {"c", cfg.c},
      {"head_widths", cfg.head_widths},
      {"lr", cfg.lr},
      {"beta1", cfg.beta1},
      {"beta2", cfg.beta2},
      {"adam_eps", cfg.adam_eps},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"seed", cfg.seed},
      {"label_fraction", cfg.label_fraction},
      {"mu_min", cfg.mu_min},
      {"mu_max", cfg.mu_max},
      {"freeze_mu", cfg.freeze_mu},
      {"uniform_attention", cfg.uniform_attention},
      {"windows_per_utterance", cfg.windows_per_utterance},
      {"num_classes", cfg.num_classes},
  };
}

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  TrainConfig cfg;
  const nlohmann::json known = to_json(cfg);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ArgumentError("unknown config field '" + key + "'");
  }
  read_field(j, "sample_rate", cfg.sample_rate);
  read_field(j, "f", cfg.f);
  read_field(j, "k", cfg.k);
  read_field(j, "s", cfg.s);
  read_field(j, "t", cfg.t);
  read_field(j, "t_keep", cfg.t_keep);
  read_field(j, "shift", cfg.shift);
  read_field(j, "h", cfg.h);
  read_field(j, "c", cfg.c);
  read_field(j, "head_widths", cfg.head_widths);
  read_field(j, "lr", cfg.lr);
  read_field(j, "beta1", cfg.beta1);
  read_field(j, "beta2", cfg.beta2);
  read_field(j, "adam_eps", cfg.adam_eps);
  read_field(j, "epochs", cfg.epochs);
  read_field(j, "batch_size", cfg.batch_size);
  read_field(j, "seed", cfg.seed);
  read_field(j, "label_fraction", cfg.label_fraction);
  read_field(j, "mu_min", cfg.mu_min);
  read_field(j, "mu_max", cfg.mu_max);
  read_field(j, "freeze_mu", cfg.freeze_mu);
  read_field(j, "uniform_attention", cfg.uniform_attention);
  read_field(j, "windows_per_utterance", cfg.windows_per_utterance);
  read_field(j, "num_classes", cfg.num_classes);
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
}

}  // namespace rawatt
