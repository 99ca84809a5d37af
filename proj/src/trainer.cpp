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

#include "rawatt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

#include "rawatt/error.hpp"

namespace rawatt {
namespace {

struct TrainWindow {
  std::size_t item = 0;
  std::size_t window = 0;
};

// Evenly spaced window positions, without duplicates.
std::vector<std::size_t> pick_windows(std::size_t available, int wanted) {
  std::vector<std::size_t> out;
  const auto n = std::min<std::size_t>(available, static_cast<std::size_t>(wanted));
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) + 0.5) * static_cast<double>(available) /
                           static_cast<double>(n) - 0.5;
    const auto p = static_cast<std::size_t>(std::lround(std::max(0.0, pos)));
    if (out.empty() || out.back() != p) out.push_back(p);
  }
  return out;
}

int argmax(const Vector& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

void check_compatible(const Network& net, const Dataset& data) {
  if (data.sample_rate != net.cfg.sample_rate) {
    throw ArgumentError("sample rate " + std::to_string(data.sample_rate) +
                        " does not match the model's " + std::to_string(net.cfg.sample_rate));
  }
  if (data.num_classes > net.cfg.num_classes) {
    throw ArgumentError("dataset has " + std::to_string(data.num_classes) +
                        " classes but the model only " + std::to_string(net.cfg.num_classes));
  }
}

// Same as accumulate_window_gradient, from cached log energies (mu frozen).
double accumulate_from_features(const Network& net, const Matrix& x, int label,
                                std::span<double> grad, Vector* logits) {
  const auto layout = param_layout(net);
  const WindowForward fwd = forward_features(net, x);
  const CrossEntropy ce = cross_entropy(fwd.logits, label);
  if (logits) *logits = fwd.logits;
  const HeadGrads hg = head_backward(fwd.att.z, net.head, fwd.head, ce.grad);
  const AttentionGrads ag = attention_backward(x, net.nin, net.cfg.c, fwd.att, hg.dz);
  auto add = [&](std::size_t e, const double* src) {
    for (std::size_t i = 0; i < layout[e].size(); ++i) grad[layout[e].offset + i] += src[i];
  };
  add(1, ag.dnin.w1.data());
  add(2, ag.dnin.b1.data());
  add(3, ag.dnin.w2.data());
  add(4, ag.dnin.b2.data());
  std::size_t e = 5;
  for (const auto& layer : hg.dparams.layers) {
    add(e++, layer.w.data());
    add(e++, layer.b.data());
  }
  return ce.loss;
}

}  // namespace

std::vector<int> classify_windows(const Network& net, const Utterance& u) {
  const auto& cfg = net.cfg;
  const std::size_t n = count_windows(u.samples.size(), cfg.s, cfg.t, cfg.shift);
  std::vector<int> out;
  if (n == 0) return out;
  const Matrix frames = filterbank_frames(u, net.fb, cfg.s, cfg.shift);
  for (std::size_t p = 0; p < n; ++p) {
    const Matrix x = frames.middleCols(static_cast<Eigen::Index>(p), cfg.t);
    out.push_back(argmax(forward_features(net, x).logits));
  }
  return out;
}

EvalResult evaluate(const Network& net, const Dataset& data, std::optional<Split> split) {
  check_compatible(net, data);
  const auto& cfg = net.cfg;
  const int classes = cfg.num_classes;
  EvalResult res;
  res.confusion.assign(classes, std::vector<int>(classes, 0));
  Vector attention = Vector::Zero(cfg.f);
  std::size_t windows = 0, correct = 0;
  for (const auto& item : data.items) {
    if (split && item.split != *split) continue;
    const std::size_t n = count_windows(item.utt.samples.size(), cfg.s, cfg.t, cfg.shift);
    if (n == 0) {
      throw ArgumentError("evaluate: utterance " + item.utt.id +
                          " is shorter than one context window");
    }
    const Matrix frames = filterbank_frames(item.utt, net.fb, cfg.s, cfg.shift);
    std::vector<int> votes(classes, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const Matrix x = frames.middleCols(static_cast<Eigen::Index>(p), cfg.t);
      const WindowForward fwd = forward_features(net, x);
      ++votes[argmax(fwd.logits)];
      attention += fwd.att.w;
      ++windows;
    }
    const int predicted =
        static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    ++res.confusion[item.label][predicted];
    correct += predicted == item.label ? 1 : 0;
    ++res.utterances;
  }
  res.accuracy = res.utterances ? static_cast<double>(correct) / res.utterances
                                : std::numeric_limits<double>::quiet_NaN();
  if (windows) attention /= static_cast<double>(windows);
  res.mean_attention.assign(attention.data(), attention.data() + attention.size());
  return res;
}

TrainResult train(const Dataset& input, TrainConfig cfg, const TrainOptions& options) {
  if (input.items.empty()) throw ArgumentError("train: empty dataset");
  if (cfg.num_classes == 0) cfg.num_classes = input.num_classes;
  cfg.validate();

  const Dataset data = cfg.label_fraction < 1.0
                           ? subset_labels(input, cfg.label_fraction, cfg.seed)
                           : input;
  TrainResult result{Network::init(cfg), {}};
  Network& net = result.net;
  check_compatible(net, data);
  if (options.mu_init) {
    const auto& mu = *options.mu_init;
    if (static_cast<int>(mu.size()) != cfg.f) {
      throw ArgumentError("mu init has " + std::to_string(mu.size()) + " values, expected f = " +
                          std::to_string(cfg.f));
    }
    for (double m : mu) {
      if (m < cfg.mu_min || m > cfg.mu_max) {
        throw ArgumentError("mu init value " + std::to_string(m) + " outside [mu_min, mu_max]");
      }
    }
    net.fb.mu = Eigen::Map<const Vector>(mu.data(), cfg.f);
  }

  std::vector<TrainWindow> windows;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto& item = data.items[i];
    if (item.split != Split::kTrain) continue;
    ++result.metrics.train_utterances;
    const std::size_t n = count_windows(item.utt.samples.size(), cfg.s, cfg.t, cfg.shift);
    for (std::size_t p : pick_windows(n, cfg.windows_per_utterance)) windows.push_back({i, p});
  }
  if (windows.empty()) throw ArgumentError("train: no training utterance holds a full window");
  result.metrics.train_windows = windows.size();

  // With mu frozen the log energies never change.
  std::vector<Matrix> cached_x;
  if (cfg.freeze_mu) {
    for (const auto& w : windows) {
      const FrameBlock block =
          frame_window(data.items[w.item].utt, cfg.s, cfg.t, cfg.shift, w.window);
      cached_x.push_back(filterbank_forward(block, net.fb).x);
    }
  }

  const auto layout = param_layout(net);
  std::vector<double> params = flatten(net);
  std::vector<double> grad(params.size());
  OptState opt(params.size(), {cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps});
  const std::vector<ClampRange> clamps{{layout[0].offset, layout[0].size(), cfg.mu_min, cfg.mu_max}};
  std::vector<ClampRange> frozen;
  if (cfg.freeze_mu) frozen.push_back({layout[0].offset, layout[0].size(), 0.0, 0.0});
  if (cfg.uniform_attention) {
    frozen.push_back({layout[1].offset, layout[5].offset - layout[1].offset, 0.0, 0.0});
  }

  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(cfg.seed);
  double best = std::numeric_limits<double>::infinity();
  Vector logits;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    const std::size_t batches = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t r = lo; r < hi; ++r) {
        const TrainWindow& w = windows[order[r]];
        const int label = data.items[w.item].label;
        double loss = 0.0;
        if (cfg.freeze_mu) {
          loss = accumulate_from_features(net, cached_x[order[r]], label, grad, &logits);
        } else {
          const FrameBlock block =
              frame_window(data.items[w.item].utt, cfg.s, cfg.t, cfg.shift, w.window);
          loss = accumulate_window_gradient(net, block, label, grad, &logits);
        }
        batch_loss += loss;
        correct += argmax(logits) == label ? 1 : 0;
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b));
      }
      loss_sum += batch_loss;
      const double inv = 1.0 / static_cast<double>(hi - lo);
      for (double& g : grad) g *= inv;
      try {
        adam_step(params, grad, opt, clamps, frozen);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(b) + ")");
      }
      unflatten(params, net);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(order.size());
    best = std::min(best, m.train_loss);
    m.best_loss = best;
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    m.mu.assign(net.fb.mu.data(), net.fb.mu.data() + net.fb.mu.size());
    if (data.count(Split::kVal) > 0) {
      const EvalResult ev = evaluate(net, data, Split::kVal);
      m.val_accuracy = ev.accuracy;
      m.attention = ev.mean_attention;
    } else {
      m.val_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    if (options.on_epoch) options.on_epoch(m);
    result.metrics.epochs.push_back(std::move(m));
  }
  return result;
}

void write_metrics_jsonl(const std::filesystem::path& path, const RunMetrics& metrics) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& m : metrics.epochs) {
    nlohmann::json j = {{"epoch", m.epoch},
                        {"train_loss", m.train_loss},
                        {"best_loss", m.best_loss},
                        {"train_accuracy", m.train_accuracy},
                        {"mu", m.mu},
                        {"attention", m.attention}};
    j["val_accuracy"] = std::isnan(m.val_accuracy) ? nlohmann::json(nullptr)
                                                   : nlohmann::json(m.val_accuracy);
    out << j.dump() << '\n';
  }
}

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& metrics) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "epoch,train_loss,best_loss,train_accuracy,val_accuracy\n";
  for (const auto& m : metrics.epochs) {
    out << m.epoch << ',' << m.train_loss << ',' << m.best_loss << ',' << m.train_accuracy << ','
        << m.val_accuracy << '\n';
  }
}

}  // namespace rawatt
