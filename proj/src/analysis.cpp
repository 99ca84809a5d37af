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

#include "rawatt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "rawatt/error.hpp"

namespace rawatt {
namespace {

std::vector<double> unit_norm(const Vector& v) {
  const double n = v.norm();
  std::vector<double> out(v.data(), v.data() + v.size());
  if (n > 0.0) {
    for (double& x : out) x /= n;
  }
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j);
    for (std::size_t q = i; q <= j; ++q) ranks[idx[q]] = r;
    i = j + 1;
  }
  return ranks;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace

std::vector<FilterReportRow> analyze_filters(const Network& net) {
  const auto& cfg = net.cfg;
  const FilterbankParams ref = mel_init(cfg.f, cfg.sample_rate, cfg.mu_min, cfg.mu_max, cfg.k);
  std::vector<double> learned(net.fb.mu.data(), net.fb.mu.data() + net.fb.mu.size());
  std::sort(learned.begin(), learned.end());
  std::vector<FilterReportRow> rows;
  for (int i = 0; i < cfg.f; ++i) {
    rows.push_back({i, learned[i] * cfg.sample_rate, ref.mu[i] * cfg.sample_rate});
  }
  return rows;
}

void write_filter_report(const std::filesystem::path& path,
                         const std::vector<FilterReportRow>& rows) {
  auto out = open_csv(path);
  out << "rank,learned_mu_sorted_Hz,mel_reference_Hz\n";
  for (const auto& r : rows) out << r.rank << ',' << r.learned_hz << ',' << r.mel_reference_hz << '\n';
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ArgumentError("correlation: need two equally long vectors of at least 2 values");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson_correlation(average_ranks(a), average_ranks(b));
}

AttentionProfile analyze_attention(const Network& net, const Utterance& u) {
  const auto& cfg = net.cfg;
  const std::size_t n = count_windows(u.samples.size(), cfg.s, cfg.t, cfg.shift);
  if (n == 0) {
    throw ArgumentError("analyze_attention: utterance " + u.id +
                        " is shorter than one context window");
  }
  const Matrix frames = filterbank_frames(u, net.fb, cfg.s, cfg.shift);
  AttentionProfile prof;
  prof.id = u.id;
  Vector attention = Vector::Zero(cfg.f);
  Vector energy = Vector::Zero(cfg.f);
  for (std::size_t p = 0; p < n; ++p) {
    const Matrix x = frames.middleCols(static_cast<Eigen::Index>(p), cfg.t);
    const Vector w = cfg.uniform_attention
                         ? Vector::Constant(cfg.f, 1.0 / cfg.f)
                         : nin_forward(x, net.nin);
    attention += w;
    energy += x.rowwise().mean();
    prof.window_weights.emplace_back(w.data(), w.data() + w.size());
  }
  prof.attention_norm = unit_norm(attention / static_cast<double>(n));
  prof.energy_norm = unit_norm(energy / static_cast<double>(n));
  prof.pearson = pearson_correlation(prof.attention_norm, prof.energy_norm);
  prof.spearman = spearman_correlation(prof.attention_norm, prof.energy_norm);
  return prof;
}

std::vector<AttentionProfile> analyze_attention(const Network& net,
                                                const std::vector<Utterance>& utterances) {
  if (utterances.empty()) throw ArgumentError("analyze_attention: no utterances");
  std::vector<AttentionProfile> out;
  for (const auto& u : utterances) out.push_back(analyze_attention(net, u));
  return out;
}

void write_attention_report(const std::filesystem::path& path,
                            const std::vector<AttentionProfile>& profiles) {
  auto out = open_csv(path);
  out << "utterance,band,attention_norm,energy_norm\n";
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < p.attention_norm.size(); ++i) {
      out << p.id << ',' << i << ',' << p.attention_norm[i] << ',' << p.energy_norm[i] << '\n';
    }
  }
}

void write_attention_summary(const std::filesystem::path& path,
                             const std::vector<AttentionProfile>& profiles) {
  auto out = open_csv(path);
  out << "utterance,pearson,spearman\n";
  for (const auto& p : profiles) out << p.id << ',' << p.pearson << ',' << p.spearman << '\n';
}

void write_attention_dump(const std::filesystem::path& path,
                          const std::vector<AttentionProfile>& profiles) {
  auto out = open_csv(path);
  for (const auto& p : profiles) {
    for (const auto& w : p.window_weights) {
      for (std::size_t i = 0; i < w.size(); ++i) out << (i ? "," : "") << w[i];
      out << '\n';
    }
  }
}

Stage parse_stage(std::string_view name) {
  if (name == "x") return Stage::kX;
  if (name == "y") return Stage::kY;
  if (name == "z") return Stage::kZ;
  if (name == "mel") return Stage::kMel;
  throw ArgumentError("unknown stage '" + std::string(name) + "' (expected x, y, z or mel)");
}

Matrix extract_features(const Network& net, const Utterance& u, Stage stage) {
  const auto& cfg = net.cfg;
  if (u.sample_rate != cfg.sample_rate) {
    throw ArgumentError("extract: sample rate " + std::to_string(u.sample_rate) +
                        " does not match the model's " + std::to_string(cfg.sample_rate));
  }
  if (stage == Stage::kMel) return mel_filterbank_features(u, cfg.f);

  const auto blocks = frame_signal(u, cfg.s, cfg.t, cfg.shift);
  const int width = stage == Stage::kZ ? cfg.t_keep : cfg.t;
  Matrix out(cfg.f, static_cast<Eigen::Index>(blocks.size()) * width);
  for (std::size_t p = 0; p < blocks.size(); ++p) {
    const Matrix x = filterbank_forward(blocks[p], net.fb).x;
    Matrix block;
    if (stage == Stage::kX) {
      block = x;
    } else {
      const Vector w = cfg.uniform_attention ? Vector::Constant(cfg.f, 1.0 / cfg.f)
                                             : nin_forward(x, net.nin);
      const Matrix y = apply_attention(x, w);
      block = stage == Stage::kY ? y : prune_center(soft_attention_norm(y, cfg.c), cfg.t_keep);
    }
    out.middleCols(static_cast<Eigen::Index>(p) * width, width) = block;
  }
  return out;
}

}  // namespace rawatt
