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
#include <string>
#include <vector>

#include "rawatt/types.hpp"

namespace rawatt {

/// Mono waveform with amplitudes in [-1, 1].
struct Utterance {
  std::vector<double> samples;
  int sample_rate = 16000;
  std::string id;
};

/// One context window of raw audio: column j holds the s samples of frame j.
///
/// Stored column-major so each frame is contiguous.
struct FrameBlock {
  Eigen::MatrixXd data;       // s x t
  int frame_shift = 0;        // samples between consecutive frames
  std::size_t start = 0;      // first sample of frame 0 in the utterance
  std::size_t window_index = 0;

  int samples_per_frame() const { return static_cast<int>(data.rows()); }
  int frames() const { return static_cast<int>(data.cols()); }
  int center_index() const { return (frames() - 1) / 2; }
};

/// Reads a mono 16-bit PCM RIFF/WAVE file. Throws FormatError naming the
/// offending header field for anything else.
Utterance load_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1) and scaled by 32768.
void write_wav(const std::filesystem::path& path, const Utterance& u);

/// Number of complete context windows of t frames of s samples at the given
/// shift that fit in n samples.
std::size_t count_windows(std::size_t n, int s, int t, int shift);

/// Splits an utterance into overlapping context windows stepping by one frame
/// shift. Partial windows at the edges are dropped; too short an utterance
/// yields an empty sequence. Throws ArgumentError for even t or non-positive
/// sizes.
std::vector<FrameBlock> frame_signal(const Utterance& u, int s, int t, int shift);

/// The window starting at frame `window` (0-based), same layout as
/// frame_signal's output.
FrameBlock frame_window(const Utterance& u, int s, int t, int shift, std::size_t window);

// Mel scale, mel(h) = 2595 log10(1 + h / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centers (Hz) of the f triangular filters used by mel_filterbank_features.
std::vector<double> mel_band_centers_hz(int f, int sample_rate);

/// Log mel filterbank energies over 25 ms Hamming-windowed frames at a 10 ms
/// shift: f x T, one column per frame. Throws ArgumentError for f < 2 or an
/// utterance shorter than one frame.
Matrix mel_filterbank_features(const Utterance& u, int f);

/// Per-row mean/variance normalization over a centered running window of
/// `window_seconds`, clipped at the edges. Std-dev floored at 1e-8.
Matrix cmvn_running(const Matrix& feat, double window_seconds = 1.0,
                    double frames_per_second = 100.0);

}  // namespace rawatt
