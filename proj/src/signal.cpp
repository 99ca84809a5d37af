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

#include "rawatt/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "rawatt/error.hpp"

namespace rawatt {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

[[noreturn]] void wav_error(const std::filesystem::path& path, const std::string& msg) {
  throw FormatError("WAV format error in " + path.string() + ": " + msg);
}

void check_framing(int s, int t, int shift) {
  if (s <= 0 || t <= 0 || shift <= 0) {
    throw ArgumentError("frame_signal: s, t and shift must be positive");
  }
  if (t % 2 == 0) {
    throw ArgumentError("frame_signal: t must be odd so a center frame exists, got " +
                        std::to_string(t));
  }
}

}  // namespace

Utterance load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WAV file " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 12) wav_error(path, "file shorter than the RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) wav_error(path, "riff_id is not 'RIFF'");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) wav_error(path, "wave_id is not 'WAVE'");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) wav_error(path, "fmt chunk truncated");
      const std::uint16_t format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format != 1) {
        wav_error(path, "audio_format = " + std::to_string(format) + " (expected 1, PCM)");
      }
      if (channels != 1) {
        wav_error(path, "num_channels = " + std::to_string(channels) + " (expected 1, mono)");
      }
      if (bits != 16) {
        wav_error(path, "bits_per_sample = " + std::to_string(bits) + " (expected 16)");
      }
      if (rate == 0) wav_error(path, "sample_rate = 0");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) wav_error(path, "data chunk precedes fmt chunk");
      if (body + size > bytes.size()) {
        wav_error(path, "data chunk_size = " + std::to_string(size) + " exceeds the " +
                            std::to_string(bytes.size() - body) + " bytes present (truncated)");
      }
      if (size % 2 != 0) wav_error(path, "data chunk_size is not a multiple of block_align");
      Utterance u;
      u.sample_rate = static_cast<int>(rate);
      u.id = path.stem().string();
      u.samples.resize(size / 2);
      for (std::size_t i = 0; i < u.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
        u.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return u;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) wav_error(path, "missing fmt chunk");
  wav_error(path, "missing data chunk");
}

void write_wav(const std::filesystem::path& path, const Utterance& u) {
  if (u.sample_rate <= 0) throw ArgumentError("write_wav: sample_rate must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const auto data_bytes = static_cast<std::uint32_t>(u.samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(u.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(u.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (double x : u.samples) {
    const double scaled = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
    put_u16(out, static_cast<std::uint16_t>(
                     static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
  }
}

std::size_t count_windows(std::size_t n, int s, int t, int shift) {
  check_framing(s, t, shift);
  const std::size_t span = static_cast<std::size_t>(s) + static_cast<std::size_t>(t - 1) * shift;
  if (n < span) return 0;
  return (n - span) / static_cast<std::size_t>(shift) + 1;
}

FrameBlock frame_window(const Utterance& u, int s, int t, int shift, std::size_t window) {
  if (window >= count_windows(u.samples.size(), s, t, shift)) {
    throw ArgumentError("frame_window: window index out of range");
  }
  FrameBlock block;
  block.data.resize(s, t);
  block.frame_shift = shift;
  block.start = window * static_cast<std::size_t>(shift);
  block.window_index = window;
  for (int j = 0; j < t; ++j) {
    const double* src = u.samples.data() + block.start + static_cast<std::size_t>(j) * shift;
    std::copy(src, src + s, block.data.col(j).data());
  }
  return block;
}

std::vector<FrameBlock> frame_signal(const Utterance& u, int s, int t, int shift) {
  const std::size_t n = count_windows(u.samples.size(), s, t, shift);
  std::vector<FrameBlock> blocks;
  blocks.reserve(n);
  for (std::size_t p = 0; p < n; ++p) blocks.push_back(frame_window(u, s, t, shift, p));
  return blocks;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// f + 2 edge frequencies equally spaced in mel between 0 and Nyquist.
std::vector<double> mel_edges_hz(int f, int sample_rate) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(f + 2);
  for (int i = 0; i < f + 2; ++i) edges[i] = mel_to_hz(top * i / (f + 1));
  return edges;
}

}  // namespace

std::vector<double> mel_band_centers_hz(int f, int sample_rate) {
  auto edges = mel_edges_hz(f, sample_rate);
  return {edges.begin() + 1, edges.end() - 1};
}

Matrix mel_filterbank_features(const Utterance& u, int f) {
  if (f < 2) throw ArgumentError("mel_filterbank_features: need at least 2 bands");
  if (u.sample_rate <= 0) throw ArgumentError("mel_filterbank_features: bad sample rate");
  const int frame_len = static_cast<int>(std::lround(0.025 * u.sample_rate));
  const int shift = static_cast<int>(std::lround(0.010 * u.sample_rate));
  if (u.samples.size() < static_cast<std::size_t>(frame_len)) {
    throw ArgumentError("mel_filterbank_features: utterance shorter than one 25 ms frame");
  }
  const std::size_t frames = (u.samples.size() - frame_len) / shift + 1;
  int n_fft = 1;
  while (n_fft < frame_len) n_fft *= 2;
  const int n_bins = n_fft / 2 + 1;

  std::vector<double> window(frame_len);
  for (int n = 0; n < frame_len; ++n) {
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (frame_len - 1));
  }

  const auto edges = mel_edges_hz(f, u.sample_rate);
  Matrix weights = Matrix::Zero(f, n_bins);
  for (int i = 0; i < f; ++i) {
    const double lo = edges[i], mid = edges[i + 1], hi = edges[i + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double hz = static_cast<double>(b) * u.sample_rate / n_fft;
      if (hz > lo && hz < mid) {
        weights(i, b) = (hz - lo) / (mid - lo);
      } else if (hz >= mid && hz < hi) {
        weights(i, b) = (hi - hz) / (hi - mid);
      }
    }
  }

  Eigen::FFT<double> fft;
  std::vector<double> buf(n_fft);
  std::vector<std::complex<double>> spec;
  Vector power(n_bins);
  Matrix out(f, static_cast<Eigen::Index>(frames));
  for (std::size_t j = 0; j < frames; ++j) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < frame_len; ++n) buf[n] = u.samples[j * shift + n] * window[n];
    fft.fwd(spec, buf);
    for (int b = 0; b < n_bins; ++b) power[b] = std::norm(spec[b]);
    const Vector energy = weights * power;
    for (int i = 0; i < f; ++i) out(i, static_cast<Eigen::Index>(j)) = std::log(energy[i] + kLogFloor);
  }
  return out;
}

Matrix cmvn_running(const Matrix& feat, double window_seconds, double frames_per_second) {
  const Eigen::Index T = feat.cols();
  const auto win = std::max<Eigen::Index>(1, std::lround(window_seconds * frames_per_second));
  Matrix out(feat.rows(), T);
  for (Eigen::Index tau = 0; tau < T; ++tau) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, tau - win / 2);
    const Eigen::Index hi = std::min<Eigen::Index>(T, tau - win / 2 + win);
    const double n = static_cast<double>(hi - lo);
    for (Eigen::Index r = 0; r < feat.rows(); ++r) {
      const auto seg = feat.row(r).segment(lo, hi - lo);
      const double mean = seg.sum() / n;
      const double var = (seg.array() - mean).square().sum() / n;
      out(r, tau) = (feat(r, tau) - mean) / std::max(std::sqrt(var), 1e-8);
    }
  }
  return out;
}

}  // namespace rawatt
