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
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "rawatt/signal.hpp"

namespace rawatt {

/// A band-limited source: a cluster of sinusoids spread uniformly over
/// [center - bandwidth/2, center + bandwidth/2]; bandwidth 0 is a pure tone.
struct BandComponent {
  double center_hz = 1000.0;
  double bandwidth_hz = 0.0;
  double amplitude = 1.0;
};

struct ClassRecipe {
  std::vector<BandComponent> components;
};

/// Recipe for a synthetic classification corpus.
struct SynthTask {
  std::vector<ClassRecipe> classes;
  int sample_rate = 16000;
  double duration_s = 0.3;
  /// Broadband white-noise SNR; +inf disables noise.
  double snr_db = 10.0;
  /// Optional first-difference (high-band) noise, SNR relative to the signal.
  double highband_snr_db = std::numeric_limits<double>::infinity();
  /// Slow amplitude modulation of the class signal (syllable-like bursts).
  double modulation_hz = 4.0;
  double modulation_depth = 0.9;
  int tones_per_component = 16;
  /// Per-utterance level jitter, uniform in +-level_jitter_db around rms_level.
  double rms_level = 0.1;
  double level_jitter_db = 6.0;
  std::uint64_t seed = 0;

  /// Throws ArgumentError for frequencies at or above Nyquist or a NaN SNR.
  void validate() const;
};

/// n_classes disjoint bands of band_hz each, the first starting at first_hz.
SynthTask band_id_task(int n_classes = 8, double band_hz = 400.0, double first_hz = 200.0,
                       double snr_db = 10.0, std::uint64_t seed = 0);

nlohmann::json to_json(const SynthTask& task);
SynthTask synth_task_from_json(const nlohmann::json& j);

enum class Split { kTrain, kVal };

struct Example {
  Utterance utt;
  int label = 0;
  Split split = Split::kTrain;
  std::string path;  // source file, empty for in-memory data
};

struct Dataset {
  std::vector<Example> items;
  int num_classes = 0;
  int sample_rate = 16000;

  std::size_t count(Split split) const;
  std::size_t count(Split split, int label) const;
};

/// 64-bit FNV-1a; used for the train/val split so it is stable everywhere.
std::uint64_t fnv1a(std::string_view text);

/// One utterance of a class; depends only on (task.seed, label, index).
Utterance synthesize_utterance(const SynthTask& task, int label, int index);

/// n_per_class utterances per class. Within each class the 20% of ids with the
/// smallest FNV-1a hash form the validation split. Deterministic in task.seed.
/// Throws GenerationError if a class has no signal energy but finite SNR.
Dataset generate_dataset(const SynthTask& task, int n_per_class);

/// Class-stratified subset of the training split: floor(fraction * n_c)
/// examples of each class, chosen by a seeded shuffle. The validation split
/// is kept whole. Throws ArgumentError if a class would be left empty.
Dataset subset_labels(const Dataset& data, double fraction, std::uint64_t seed);

/// JSON lines {id, path, class, split}; paths relative to the manifest's
/// directory are resolved against it.
void write_manifest(const std::filesystem::path& path, const Dataset& data);
Dataset load_manifest(const std::filesystem::path& path);

/// Writes every utterance as <dir>/wav/<id>.wav and <dir>/manifest.jsonl.
void export_dataset(const std::filesystem::path& dir, Dataset& data);

}  // namespace rawatt
