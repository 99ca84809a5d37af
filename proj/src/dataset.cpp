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

#include "rawatt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "rawatt/error.hpp"

namespace rawatt {
namespace {

// JSON has no infinity; null stands for "disabled".
nlohmann::json db_to_json(double db) {
  return std::isinf(db) ? nlohmann::json(nullptr) : nlohmann::json(db);
}

double db_from_json(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::string utterance_id(int label, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%d_%04d", label, index);
  return buf;
}

double mean_square(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "val"; }

}  // namespace

void SynthTask::validate() const {
  if (classes.size() < 2) throw ArgumentError("synth task needs at least 2 classes");
  if (sample_rate <= 0 || !(duration_s > 0.0)) {
    throw ArgumentError("synth task: sample_rate and duration must be positive");
  }
  for (const auto& cls : classes) {
    for (const auto& c : cls.components) {
      if (!(c.center_hz - c.bandwidth_hz / 2 > 0.0) ||
          !(c.center_hz + c.bandwidth_hz / 2 < sample_rate / 2.0) || c.bandwidth_hz < 0.0) {
        throw ArgumentError("synth task: component band must lie inside (0, sample_rate/2)");
      }
    }
  }
  if (std::isnan(snr_db) || std::isnan(highband_snr_db) || snr_db == -INFINITY) {
    throw ArgumentError("synth task: SNR must be a number or +inf");
  }
  if (tones_per_component < 1) throw ArgumentError("synth task: tones_per_component < 1");
  if (modulation_depth < 0.0 || modulation_depth > 1.0) {
    throw ArgumentError("synth task: modulation_depth must be in [0, 1]");
  }
}

SynthTask band_id_task(int n_classes, double band_hz, double first_hz, double snr_db,
                       std::uint64_t seed) {
  SynthTask task;
  task.snr_db = snr_db;
  task.seed = seed;
  for (int c = 0; c < n_classes; ++c) {
    const double lo = first_hz + c * band_hz;
    task.classes.push_back({{{lo + band_hz / 2, band_hz, 1.0}}});
  }
  return task;
}

nlohmann::json to_json(const SynthTask& task) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& cls : task.classes) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : cls.components) {
      comps.push_back({{"center_hz", c.center_hz},
                       {"bandwidth_hz", c.bandwidth_hz},
                       {"amplitude", c.amplitude}});
    }
    classes.push_back(comps);
  }
  return {{"classes", classes},
          {"sample_rate", task.sample_rate},
          {"duration_s", task.duration_s},
          {"snr_db", db_to_json(task.snr_db)},
          {"highband_snr_db", db_to_json(task.highband_snr_db)},
          {"modulation_hz", task.modulation_hz},
          {"modulation_depth", task.modulation_depth},
          {"tones_per_component", task.tones_per_component},
          {"rms_level", task.rms_level},
          {"level_jitter_db", task.level_jitter_db},
          {"seed", task.seed}};
}

SynthTask synth_task_from_json(const nlohmann::json& j) {
  SynthTask task;
  try {
    for (const auto& comps : j.at("classes")) {
      ClassRecipe cls;
      for (const auto& c : comps) {
        cls.components.push_back({c.at("center_hz").get<double>(),
                                  c.value("bandwidth_hz", 0.0), c.value("amplitude", 1.0)});
      }
      task.classes.push_back(std::move(cls));
    }
    task.sample_rate = j.value("sample_rate", task.sample_rate);
    task.duration_s = j.value("duration_s", task.duration_s);
    if (j.contains("snr_db")) task.snr_db = db_from_json(j["snr_db"]);
    if (j.contains("highband_snr_db")) task.highband_snr_db = db_from_json(j["highband_snr_db"]);
    task.modulation_hz = j.value("modulation_hz", task.modulation_hz);
    task.modulation_depth = j.value("modulation_depth", task.modulation_depth);
    task.tones_per_component = j.value("tones_per_component", task.tones_per_component);
    task.rms_level = j.value("rms_level", task.rms_level);
    task.level_jitter_db = j.value("level_jitter_db", task.level_jitter_db);
    task.seed = j.value("seed", task.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("synth task JSON: ") + e.what());
  }
  task.validate();
  return task;
}

std::size_t Dataset::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const Example& e) { return e.split == split; }));
}

std::size_t Dataset::count(Split split, int label) const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [&](const Example& e) {
    return e.split == split && e.label == label;
  }));
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Utterance synthesize_utterance(const SynthTask& task, int label, int index) {
  if (label < 0 || label >= static_cast<int>(task.classes.size())) {
    throw ArgumentError("synthesize_utterance: label out of range");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(task.seed), static_cast<std::uint32_t>(task.seed >> 32),
                    static_cast<std::uint32_t>(label), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto n = static_cast<std::size_t>(std::lround(task.duration_s * task.sample_rate));
  const double two_pi = 2.0 * std::numbers::pi;
  const double sr = task.sample_rate;
  std::vector<double> signal(n, 0.0);
  for (const auto& comp : task.classes[label].components) {
    const int tones = comp.bandwidth_hz > 0.0 ? task.tones_per_component : 1;
    const double amp = comp.amplitude / std::sqrt(static_cast<double>(tones));
    for (int k = 0; k < tones; ++k) {
      const double hz = comp.center_hz + comp.bandwidth_hz * (tones > 1 ? unit(rng) - 0.5 : 0.0);
      const double phase = two_pi * unit(rng);
      for (std::size_t i = 0; i < n; ++i) signal[i] += amp * std::cos(two_pi * hz * i / sr + phase);
    }
  }
  if (task.modulation_depth > 0.0) {
    const double rate = task.modulation_hz * (0.75 + 0.5 * unit(rng));
    const double phase = two_pi * unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double env = 1.0 - task.modulation_depth * 0.5 *
                                   (1.0 - std::cos(two_pi * rate * i / sr + phase));
      signal[i] *= env;
    }
  }

  const double power = mean_square(signal);
  const bool noisy = std::isfinite(task.snr_db) || std::isfinite(task.highband_snr_db);
  if (noisy && !(power > 0.0)) {
    throw GenerationError("class " + std::to_string(label) +
                          " has a zero-energy signal recipe; the SNR cannot be reached");
  }
  if (std::isfinite(task.snr_db)) {
    const double sd = std::sqrt(power / std::pow(10.0, task.snr_db / 10.0));
    for (double& x : signal) x += sd * normal(rng);
  }
  if (std::isfinite(task.highband_snr_db)) {
    // First difference of white noise: power rises toward Nyquist.
    const double sd = std::sqrt(power / std::pow(10.0, task.highband_snr_db / 10.0) / 2.0);
    double prev = normal(rng);
    for (double& x : signal) {
      const double cur = normal(rng);
      x += sd * (cur - prev);
      prev = cur;
    }
  }

  const double rms = std::sqrt(mean_square(signal));
  if (rms > 0.0) {
    const double jitter = task.level_jitter_db * (2.0 * unit(rng) - 1.0);
    double gain = task.rms_level * std::pow(10.0, jitter / 20.0) / rms;
    double peak = 0.0;
    for (double x : signal) peak = std::max(peak, std::abs(x));
    gain = std::min(gain, 0.99 / peak);
    for (double& x : signal) x *= gain;
  }

  Utterance u;
  u.samples = std::move(signal);
  u.sample_rate = task.sample_rate;
  u.id = utterance_id(label, index);
  return u;
}

Dataset generate_dataset(const SynthTask& task, int n_per_class) {
  task.validate();
  if (n_per_class < 1) throw ArgumentError("generate_dataset: n_per_class must be positive");
  Dataset data;
  data.num_classes = static_cast<int>(task.classes.size());
  data.sample_rate = task.sample_rate;
  const std::size_t n_val = static_cast<std::size_t>(n_per_class) / 5;
  for (int label = 0; label < data.num_classes; ++label) {
    std::vector<Example> cls;
    for (int i = 0; i < n_per_class; ++i) {
      cls.push_back({synthesize_utterance(task, label, i), label, Split::kTrain, {}});
    }
    std::vector<std::size_t> order(cls.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fnv1a(cls[a].utt.id) < fnv1a(cls[b].utt.id);
    });
    for (std::size_t r = 0; r < n_val; ++r) cls[order[r]].split = Split::kVal;
    for (auto& e : cls) data.items.push_back(std::move(e));
  }
  return data;
}

Dataset subset_labels(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ArgumentError("subset_labels: fraction must be in (0, 1]");
  }
  Dataset out;
  out.num_classes = data.num_classes;
  out.sample_rate = data.sample_rate;
  std::mt19937_64 rng(seed);
  std::vector<bool> keep(data.items.size(), false);
  for (int label = 0; label < data.num_classes; ++label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.items.size(); ++i) {
      if (data.items[i].split == Split::kTrain && data.items[i].label == label) idx.push_back(i);
    }
    const auto n_keep =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(idx.size()) + 1e-9));
    if (n_keep == 0) {
      throw ArgumentError("subset_labels: fraction " + std::to_string(fraction) +
                          " leaves class " + std::to_string(label) + " without examples");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t r = 0; r < n_keep; ++r) keep[idx[r]] = true;
  }
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    if (data.items[i].split == Split::kVal || keep[i]) out.items.push_back(data.items[i]);
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& e : data.items) {
    const nlohmann::json line = {
        {"id", e.utt.id}, {"path", e.path}, {"class", e.label}, {"split", split_name(e.split)}};
    out << line.dump() << '\n';
  }
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  Dataset data;
  std::string line;
  int lineno = 0;
  int max_label = -1;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Example e;
    std::string split;
    try {
      const auto j = nlohmann::json::parse(line);
      e.path = j.at("path").get<std::string>();
      e.label = j.at("class").get<int>();
      split = j.at("split").get<std::string>();
      std::filesystem::path wav = e.path;
      if (wav.is_relative()) wav = path.parent_path() / wav;
      e.utt = load_wav(wav);
      e.utt.id = j.at("id").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    if (split != "train" && split != "val") {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": split must be train|val");
    }
    if (e.label < 0) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad class");
    e.split = split == "train" ? Split::kTrain : Split::kVal;
    if (first) {
      data.sample_rate = e.utt.sample_rate;
      first = false;
    } else if (e.utt.sample_rate != data.sample_rate) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": sample rate differs from the rest of the manifest");
    }
    max_label = std::max(max_label, e.label);
    data.items.push_back(std::move(e));
  }
  data.num_classes = max_label + 1;
  return data;
}

void export_dataset(const std::filesystem::path& dir, Dataset& data) {
  std::filesystem::create_directories(dir / "wav");
  for (auto& e : data.items) {
    e.path = "wav/" + e.utt.id + ".wav";
    write_wav(dir / e.path, e.utt);
  }
  write_manifest(dir / "manifest.jsonl", data);
}

}  // namespace rawatt
