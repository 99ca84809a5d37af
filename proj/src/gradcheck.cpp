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

#include "rawatt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "rawatt/attention.hpp"
#include "rawatt/filterbank.hpp"
#include "rawatt/model.hpp"
#include "rawatt/network.hpp"

namespace rawatt {
namespace {

using Rng = std::mt19937_64;

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Vector random_vector(Rng& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

FrameBlock random_frames(Rng& rng, int s, int t) {
  FrameBlock b;
  b.data = random_matrix(rng, s, t, 0.3);
  b.frame_shift = s;
  return b;
}

Vector random_mu(Rng& rng, int f) {
  std::uniform_real_distribution<double> unit(0.05, 0.45);
  Vector mu(f);
  for (int i = 0; i < f; ++i) mu[i] = unit(rng);
  return mu;
}

// Packs/unpacks a list of Eigen objects into one flat vector.
struct Packer {
  std::vector<double*> ptrs;
  std::vector<std::size_t> sizes;

  template <typename Derived>
  Packer& add(Eigen::PlainObjectBase<Derived>& m) {
    ptrs.push_back(m.data());
    sizes.push_back(static_cast<std::size_t>(m.size()));
    return *this;
  }
  std::vector<double> pack() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < ptrs.size(); ++i) out.insert(out.end(), ptrs[i], ptrs[i] + sizes[i]);
    return out;
  }
  void unpack(std::span<const double> v) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
      std::copy_n(v.data() + off, sizes[i], ptrs[i]);
      off += sizes[i];
    }
  }
};

GradcheckBlock compare(const std::string& name, std::vector<double> analytic,
                       const std::vector<double>& numeric, const GradcheckOptions& opt) {
  if (opt.corrupt_block == name && !analytic.empty()) {
    analytic[0] += 1e-2 * (1.0 + std::abs(analytic[0]));
  }
  GradcheckBlock block;
  block.name = name;
  block.entries = analytic.size();
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    block.max_rel_error = std::max(block.max_rel_error, relative_error(analytic[i], numeric[i]));
  }
  block.pass = block.max_rel_error < opt.threshold;
  return block;
}

GradcheckBlock check_kernel(Rng& rng, const GradcheckOptions& opt) {
  const Vector mu = random_mu(rng, opt.f);
  std::vector<double> analytic, numeric;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const Vector g = kernel_grad_mu(mu[i], opt.k);
    const Vector fd = (make_kernel(mu[i] + opt.step, opt.k) - make_kernel(mu[i] - opt.step, opt.k)) /
                      (2.0 * opt.step);
    analytic.insert(analytic.end(), g.data(), g.data() + g.size());
    numeric.insert(numeric.end(), fd.data(), fd.data() + fd.size());
  }
  return compare("kernel", analytic, numeric, opt);
}

GradcheckBlock check_filterbank(Rng& rng, const GradcheckOptions& opt) {
  const FrameBlock frames = random_frames(rng, opt.s, opt.t);
  FilterbankParams params{random_mu(rng, opt.f), opt.k};
  const Matrix upstream = random_matrix(rng, opt.f, opt.t, 1.0);
  const Vector g = filterbank_backward(frames, params, upstream);

  auto fn = [&](std::span<const double> mu) {
    FilterbankParams p{Eigen::Map<const Vector>(mu.data(), opt.f), opt.k};
    return (filterbank_forward(frames, p).x.array() * upstream.array()).sum();
  };
  const std::vector<double> x0(params.mu.data(), params.mu.data() + opt.f);
  return compare("filterbank", {g.data(), g.data() + g.size()}, numeric_gradient(fn, x0, opt.step),
                 opt);
}

GradcheckBlock check_attention(Rng& rng, const GradcheckOptions& opt) {
  Matrix x = random_matrix(rng, opt.f, opt.t, 1.0);
  NinParams p{random_matrix(rng, opt.h, opt.f * opt.t, 0.5), random_vector(rng, opt.h, 0.5),
              random_matrix(rng, opt.f, opt.h, 0.5), random_vector(rng, opt.f, 0.5)};
  const Matrix upstream = random_matrix(rng, opt.f, opt.t_keep, 1.0);
  AttentionGrads g = attention_backward(x, p, opt.c, opt.t_keep, upstream);

  Packer params;
  params.add(x).add(p.w1).add(p.b1).add(p.w2).add(p.b2);
  const std::vector<double> x0 = params.pack();
  Packer grads;
  grads.add(g.dx).add(g.dnin.w1).add(g.dnin.b1).add(g.dnin.w2).add(g.dnin.b2);

  auto fn = [&](std::span<const double> v) {
    params.unpack(v);
    return (attention_forward(x, p, opt.c, opt.t_keep).z.array() * upstream.array()).sum();
  };
  auto numeric = numeric_gradient(fn, x0, opt.step);
  params.unpack(x0);
  return compare("attention", grads.pack(), numeric, opt);
}

GradcheckBlock check_head(Rng& rng, const GradcheckOptions& opt) {
  Matrix z = random_matrix(rng, opt.f, opt.t_keep, 1.0);
  HeadParams head = HeadParams::init(static_cast<int>(z.size()), opt.head_widths, opt.classes,
                                     rng());
  for (auto& layer : head.layers) layer.b = random_vector(rng, layer.b.size(), 0.1);
  const int label = static_cast<int>(rng() % static_cast<std::uint64_t>(opt.classes));

  HeadTrace trace;
  const Vector logits = head_forward(z, head, &trace);
  HeadGrads g = head_backward(z, head, trace, cross_entropy(logits, label).grad);

  Packer params, grads;
  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    params.add(head.layers[l].w).add(head.layers[l].b);
    grads.add(g.dparams.layers[l].w).add(g.dparams.layers[l].b);
  }
  params.add(z);
  grads.add(g.dz);
  const std::vector<double> x0 = params.pack();
  auto fn = [&](std::span<const double> v) {
    params.unpack(v);
    return cross_entropy(head_forward(z, head), label).loss;
  };
  auto numeric = numeric_gradient(fn, x0, opt.step);
  params.unpack(x0);
  return compare("head", grads.pack(), numeric, opt);
}

GradcheckBlock check_pipeline(Rng& rng, const GradcheckOptions& opt) {
  TrainConfig cfg;
  cfg.f = opt.f;
  cfg.k = opt.k;
  cfg.s = opt.s;
  cfg.t = opt.t;
  cfg.t_keep = opt.t_keep;
  cfg.shift = opt.s;
  cfg.h = opt.h;
  cfg.c = opt.c;
  cfg.head_widths = opt.head_widths;
  cfg.num_classes = opt.classes;
  cfg.seed = rng();
  cfg.mu_min = 0.01;
  cfg.mu_max = 0.49;
  Network net = Network::init(cfg);
  net.fb.mu = random_mu(rng, opt.f);
  net.nin.w2 = random_matrix(rng, opt.f, opt.h, 0.5);
  net.nin.b2 = random_vector(rng, opt.f, 0.5);
  net.nin.b1 = random_vector(rng, opt.h, 0.5);
  const FrameBlock frames = random_frames(rng, opt.s, opt.t);
  const int label = static_cast<int>(rng() % static_cast<std::uint64_t>(opt.classes));

  const std::vector<double> x0 = flatten(net);
  std::vector<double> analytic(x0.size(), 0.0);
  accumulate_window_gradient(net, frames, label, analytic);

  auto fn = [&](std::span<const double> v) {
    unflatten(v, net);
    return cross_entropy(forward_features(net, filterbank_forward(frames, net.fb).x).logits, label)
        .loss;
  };
  auto numeric = numeric_gradient(fn, x0, opt.step);
  unflatten(x0, net);
  return compare("pipeline", analytic, numeric, opt);
}

}  // namespace

bool GradcheckReport::pass() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const GradcheckBlock& b) { return b.pass; });
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& fn,
                                     std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = fn(x);
    x[i] = orig - step;
    const double down = fn(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  Rng rng(options.seed);
  GradcheckReport report;
  report.blocks.push_back(check_kernel(rng, options));
  report.blocks.push_back(check_filterbank(rng, options));
  report.blocks.push_back(check_attention(rng, options));
  report.blocks.push_back(check_head(rng, options));
  report.blocks.push_back(check_pipeline(rng, options));
  return report;
}

void print_report(std::ostream& os, const GradcheckReport& report) {
  for (const auto& b : report.blocks) {
    os << std::left << std::setw(12) << b.name << " entries=" << std::setw(6) << b.entries
       << " max_rel_error=" << std::scientific << std::setprecision(3) << b.max_rel_error
       << std::defaultfloat << (b.pass ? "  PASS" : "  FAIL") << '\n';
  }
  os << (report.pass() ? "gradcheck: all blocks pass" : "gradcheck: FAILED") << '\n';
}

}  // namespace rawatt
