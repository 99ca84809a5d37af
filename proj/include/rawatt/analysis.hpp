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
#include <string>
#include <string_view>
#include <vector>

#include "rawatt/network.hpp"
#include "rawatt/signal.hpp"

namespace rawatt {

// --- filter center frequencies ------------------------------------------------

struct FilterReportRow {
  int rank = 0;
  double learned_hz = 0.0;    // sorted ascending
  double mel_reference_hz = 0.0;
};

/// Learned centers (sorted) next to the mel initialization with the same f.
std::vector<FilterReportRow> analyze_filters(const Network& net);
void write_filter_report(const std::filesystem::path& path,
                         const std::vector<FilterReportRow>& rows);

// --- attention vs. sub-band energy --------------------------------------------

struct AttentionProfile {
  std::string id;
  std::vector<double> attention_norm;  // mean weight per band, unit L2 norm
  std::vector<double> energy_norm;     // mean log energy per band, unit L2 norm
  double pearson = 0.0;
  double spearman = 0.0;
  std::vector<std::vector<double>> window_weights;  // one f-vector per window
};

/// Throws ArgumentError for an utterance shorter than one context window.
AttentionProfile analyze_attention(const Network& net, const Utterance& u);
std::vector<AttentionProfile> analyze_attention(const Network& net,
                                                const std::vector<Utterance>& utterances);

/// Columns: utterance, band, attention_norm, energy_norm.
void write_attention_report(const std::filesystem::path& path,
                            const std::vector<AttentionProfile>& profiles);
/// Columns: utterance, pearson, spearman.
void write_attention_summary(const std::filesystem::path& path,
                             const std::vector<AttentionProfile>& profiles);
/// One row per analyzed window, f columns of attention weights.
void write_attention_dump(const std::filesystem::path& path,
                          const std::vector<AttentionProfile>& profiles);

/// NaN when either input is constant.
double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);
/// Pearson correlation of average ranks.
double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

// --- feature extraction -------------------------------------------------------

enum class Stage { kX, kY, kZ, kMel };

/// Throws ArgumentError for anything but x, y, z or mel.
Stage parse_stage(std::string_view name);

/// x, y and z are the per-window blocks concatenated along time (f x nW*t,
/// f x nW*t, f x nW*t_keep), computed with frame_signal -> filterbank_forward
/// -> nin_forward -> apply_attention -> soft_attention_norm -> prune_center.
/// mel is mel_filterbank_features with cfg.f bands.
Matrix extract_features(const Network& net, const Utterance& u, Stage stage);

}  // namespace rawatt
