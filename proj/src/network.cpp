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

#include "rawatt/network.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "rawatt/error.hpp"

namespace rawatt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

// Seeds for independent initializers derived from one user seed.
constexpr std::uint64_t kNinSeedSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kHeadSeedSalt = 0xc2b2ae3d27d4eb4fULL;

template <typename Net, typename Fn>
void for_each_tensor(Net& net, Fn&& fn) {
  fn("mu", net.fb.mu.data(), net.fb.mu.size(), Eigen::Index{1});
  fn("nin.w1", net.nin.w1.data(), net.nin.w1.rows(), net.nin.w1.cols());
  fn("nin.b1", net.nin.b1.data(), net.nin.b1.size(), Eigen::Index{1});
  fn("nin.w2", net.nin.w2.data(), net.nin.w2.rows(), net.nin.w2.cols());
  fn("nin.b2", net.nin.b2.data(), net.nin.b2.size(), Eigen::Index{1});
  for (std::size_t l = 0; l < net.head.layers.size(); ++l) {
    auto& layer = net.head.layers[l];
    const std::string base = "head." + std::to_string(l);
    fn(base + ".w", layer.w.data(), layer.w.rows(), layer.w.cols());
    fn(base + ".b", layer.b.data(), layer.b.size(), Eigen::Index{1});
  }
}

void add_into(std::span<double> dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw FormatError("checkpoint " + path.string() + " is truncated");
  }
  return v;
}

std::string read_blob(std::istream& is, const std::filesystem::path& path) {
  const std::uint64_t n = read_u64(is, path);
  if (n > (std::uint64_t{1} << 32)) throw FormatError("checkpoint " + path.string() + ": bad length");
  std::string s(n, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("checkpoint " + path.string() + " is truncated");
  }
  return s;
}

}  // namespace

Network Network::init(const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.num_classes < 2) throw ArgumentError("Network::init: need at least 2 classes");
  Network net;
  net.cfg = cfg;
  net.fb = mel_init(cfg.f, cfg.sample_rate, cfg.mu_min, cfg.mu_max, cfg.k);
  net.nin = NinParams::init(cfg.f, cfg.t, cfg.h, cfg.seed ^ kNinSeedSalt);
  net.head = HeadParams::init(cfg.f * cfg.t_keep, cfg.head_widths, cfg.num_classes,
                              cfg.seed ^ kHeadSeedSalt);
  return net;
}

std::vector<ParamEntry> param_layout(const Network& net) {
  std::vector<ParamEntry> out;
  std::size_t offset = 0;
  for_each_tensor(net, [&](const std::string& name, const double*, Eigen::Index rows,
                           Eigen::Index cols) {
                    out.push_back({name, rows, cols, offset});
                    offset += static_cast<std::size_t>(rows * cols);
                  });
  return out;
}

std::vector<double> flatten(const Network& net) {
  std::vector<double> out;
  for_each_tensor(net, [&](const std::string&, const double* p, Eigen::Index rows,
                           Eigen::Index cols) {
                    out.insert(out.end(), p, p + rows * cols);
                  });
  return out;
}

void unflatten(std::span<const double> flat, Network& net) {
  std::size_t offset = 0;
  for_each_tensor(net, [&](const std::string& name, double* p, Eigen::Index rows,
                           Eigen::Index cols) {
    const auto n = static_cast<std::size_t>(rows * cols);
    if (offset + n > flat.size()) throw ArgumentError("unflatten: vector too short at " + name);
    std::memcpy(p, flat.data() + offset, n * sizeof(double));
    offset += n;
  });
  if (offset != flat.size()) throw ArgumentError("unflatten: vector too long");
}

WindowForward forward_features(const Network& net, const Matrix& x) {
  WindowForward out;
  out.att = net.cfg.uniform_attention ? attention_forward_uniform(x, net.cfg.c, net.cfg.t_keep)
                                      : attention_forward(x, net.nin, net.cfg.c, net.cfg.t_keep);
  out.logits = head_forward(out.att.z, net.head, &out.head);
  return out;
}

double accumulate_window_gradient(const Network& net, const FrameBlock& frames, int label,
                                  std::span<double> grad, Vector* logits) {
  const auto layout = param_layout(net);
  if (grad.size() != layout.back().offset + layout.back().size()) {
    throw ArgumentError("accumulate_window_gradient: gradient buffer has wrong size");
  }
  FilterbankTrace fb_trace;
  const FeatureBlock feat = filterbank_forward(frames, net.fb, &fb_trace);
  const WindowForward fwd = forward_features(net, feat.x);
  const CrossEntropy ce = cross_entropy(fwd.logits, label);
  if (logits) *logits = fwd.logits;

  const HeadGrads hg = head_backward(fwd.att.z, net.head, fwd.head, ce.grad);
  const AttentionGrads ag = attention_backward(feat.x, net.nin, net.cfg.c, fwd.att, hg.dz);

  std::size_t e = 0;
  if (!net.cfg.freeze_mu) {
    const Vector dmu = filterbank_backward(frames, net.fb, fb_trace, ag.dx);
    add_into(grad.subspan(layout[e].offset), dmu.data(), layout[e].size());
  }
  ++e;
  add_into(grad.subspan(layout[e].offset), ag.dnin.w1.data(), layout[e].size());
  ++e;
  add_into(grad.subspan(layout[e].offset), ag.dnin.b1.data(), layout[e].size());
  ++e;
  add_into(grad.subspan(layout[e].offset), ag.dnin.w2.data(), layout[e].size());
  ++e;
  add_into(grad.subspan(layout[e].offset), ag.dnin.b2.data(), layout[e].size());
  ++e;
  for (const auto& layer : hg.dparams.layers) {
    add_into(grad.subspan(layout[e].offset), layer.w.data(), layout[e].size());
    ++e;
    add_into(grad.subspan(layout[e].offset), layer.b.data(), layout[e].size());
    ++e;
  }
  return ce.loss;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const std::string config = to_json(net.cfg).dump();
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& e : param_layout(net)) {
    manifest.push_back({{"name", e.name}, {"shape", {e.rows, e.cols}}, {"offset", e.offset}});
  }
  const std::string manifest_text = manifest.dump();
  const std::vector<double> values = flatten(net);

  out.write("WFCK", 4);
  write_u64(out, config.size());
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  write_u64(out, manifest_text.size());
  out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
  write_u64(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "WFCK", 4) != 0) {
    throw FormatError(path.string() + " is not a checkpoint (magic != WFCK)");
  }
  TrainConfig cfg;
  nlohmann::json manifest;
  try {
    cfg = config_from_json(nlohmann::json::parse(read_blob(in, path)));
    manifest = nlohmann::json::parse(read_blob(in, path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + ": " + e.what());
  }

  Network net = Network::init(cfg);
  const auto layout = param_layout(net);
  if (!manifest.is_array() || manifest.size() != layout.size()) {
    throw FormatError("checkpoint " + path.string() + ": manifest does not match config");
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& m = manifest[i];
    if (m.at("name") != layout[i].name || m.at("shape")[0] != layout[i].rows ||
        m.at("shape")[1] != layout[i].cols || m.at("offset") != layout[i].offset) {
      throw FormatError("checkpoint " + path.string() + ": manifest entry " +
                        m.at("name").get<std::string>() + " does not match config");
    }
  }
  const std::uint64_t count = read_u64(in, path);
  std::vector<double> values(count);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(double)))) {
    throw FormatError("checkpoint " + path.string() + " is truncated");
  }
  unflatten(values, net);
  return net;
}

}  // namespace rawatt
