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

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--workdir DIR] [--only 1,2,...]
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rawatt/analysis.hpp"
#include "rawatt/attention.hpp"
#include "rawatt/dataset.hpp"
#include "rawatt/filterbank.hpp"
#include "rawatt/gradcheck.hpp"
#include "rawatt/trainer.hpp"

namespace fs = std::filesystem;
using namespace rawatt;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// The 8-class band-ID configuration shared by criteria 5-9.
TrainConfig band_id_config() {
  TrainConfig cfg;
  cfg.f = 32;
  cfg.k = 65;
  cfg.t = 21;
  cfg.t_keep = 11;
  cfg.seed = 1;
  return cfg;
}

SynthTask band_id_corpus() { return band_id_task(8, 400.0, 200.0, 10.0, 2026); }

// --- 1 -----------------------------------------------------------------------
Outcome gradient_correctness() {
  const GradcheckReport r = run_gradcheck();
  double worst = 0.0;
  std::ostringstream os;
  for (const auto& b : r.blocks) {
    worst = std::max(worst, b.max_rel_error);
    os << b.name << '=' << fmt("%.1e", b.max_rel_error) << ' ';
  }
  os << (worst < 1e-5 ? "(target 1e-5 met)" : "(above 1e-5 target)");
  return {r.pass() && worst < 1e-4, os.str()};
}

// --- 2 -----------------------------------------------------------------------
Outcome kernel_spectral_fidelity() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.02, 0.45);
  int ok = 0;
  double worst_off = 0.0, worst_mu = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double mu = unit(rng);
    const Vector w = make_kernel(mu, 129);
    int best = 0;
    double best_mag = -1.0;
    for (int b = 0; b <= 512; ++b) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index n = 0; n < w.size(); ++n) {
        acc += w[n] * std::polar(1.0, -2.0 * std::numbers::pi * b * static_cast<double>(n) / 1024.0);
      }
      if (std::abs(acc) > best_mag) {
        best_mag = std::abs(acc);
        best = b;
      }
    }
    const double off = std::abs(best - mu * 1024.0);
    if (off <= 1.0) ++ok;
    if (off > worst_off) {
      worst_off = off;
      worst_mu = mu;
    }
  }
  return {ok == 50, std::to_string(ok) + "/50 within 1 bin; worst " + fmt("%.1f", worst_off) +
                        " bins at mu=" + fmt("%.4f", worst_mu)};
}

// --- 3 -----------------------------------------------------------------------
Outcome variance_modulation() {
  const double c = 0.01;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix y(3, 101);
  const double vars[3] = {c / 100.0, c, 100.0 * c};
  for (int i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) = normal(rng);
    y.row(i).array() -= y.row(i).mean();
    y.row(i) *= std::sqrt(vars[i] / y.row(i).squaredNorm() * y.cols());
  }
  const Matrix z = soft_attention_norm(y, c);
  double worst = 0.0;
  std::ostringstream os;
  for (int i = 0; i < 3; ++i) {
    const double var = (z.row(i).array() - z.row(i).mean()).square().mean();
    worst = std::max(worst, std::abs(var - vars[i] / (vars[i] + c)));
    os << fmt("%.6f", var) << ' ';
  }
  os << "max deviation " << fmt("%.1e", worst);
  return {worst <= 1e-6, os.str()};
}

// --- 4 -----------------------------------------------------------------------
Outcome shape_contract() {
  const auto t0 = Clock::now();
  TrainConfig cfg;  // full-size defaults
  cfg.num_classes = 2;
  const Network net = Network::init(cfg);
  Utterance u;
  u.samples.resize(16400);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (double& s : u.samples) s = normal(rng);
  const auto blocks = frame_signal(u, cfg.s, cfg.t, cfg.shift);
  const Matrix x = filterbank_forward(blocks.at(0), net.fb).x;
  const AttentionOutput att = attention_forward(x, net.nin, cfg.c, cfg.t_keep);
  const double secs = seconds_since(t0);
  const bool ok = blocks.size() == 1 && x.rows() == 80 && x.cols() == 101 && att.w.size() == 80 &&
                  std::abs(att.w.sum() - 1.0) <= 1e-6 && att.z.rows() == 80 &&
                  att.z.cols() == 21 && secs < 1.0;
  std::ostringstream os;
  os << "x " << x.rows() << 'x' << x.cols() << ", w " << att.w.size() << " (sum-1 "
     << fmt("%.1e", att.w.sum() - 1.0) << "), z " << att.z.rows() << 'x' << att.z.cols() << ", "
     << fmt("%.2f", secs) << " s";
  return {ok, os.str()};
}

// --- 5 -----------------------------------------------------------------------
Outcome overfit_one() {
  const auto t0 = Clock::now();
  TrainConfig cfg = band_id_config();
  cfg.epochs = 200;
  cfg.batch_size = 1;
  cfg.num_classes = 8;
  Utterance u = synthesize_utterance(band_id_corpus(), 3, 0);
  u.samples.resize(static_cast<std::size_t>(cfg.s + (cfg.t - 1) * cfg.shift));
  Dataset one;
  one.num_classes = 8;
  one.items.push_back({u, 3, Split::kTrain, {}});
  const TrainResult res = train(one, cfg);
  const double loss = res.metrics.epochs.back().train_loss;
  const double secs = seconds_since(t0);
  return {loss < 0.01 && secs < 60.0,
          "loss after 200 steps " + fmt("%.2e", loss) + ", " + fmt("%.1f", secs) + " s"};
}

// --- 6-9 share the band-ID corpus and checkpoints ------------------------------
struct BandIdRun {
  TrainResult result;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

class BandIdSuite {
 public:
  explicit BandIdSuite(fs::path workdir) : dir_(std::move(workdir)) {}

  const Dataset& data() {
    if (!data_) data_ = generate_dataset(band_id_corpus(), 250);
    return *data_;
  }

  BandIdRun run(const TrainConfig& cfg, const std::string& tag) {
    BandIdRun r;
    const auto t0 = Clock::now();
    r.result = train(data(), cfg);
    r.val_accuracy = evaluate(r.result.net, data(), Split::kVal).accuracy;
    r.seconds = seconds_since(t0);
    save_checkpoint(dir_ / (tag + ".wfck"), r.result.net);
    write_metrics_jsonl(dir_ / (tag + ".metrics.jsonl"), r.result.metrics);
    std::cerr << "  [" << tag << "] val accuracy " << r.val_accuracy << " in " << r.seconds
              << " s\n";
    return r;
  }

  const BandIdRun& raw_att() {
    if (!raw_) raw_ = run(band_id_config(), "raw_att");
    return *raw_;
  }

  const BandIdRun& ablation() {
    if (!ablation_) {
      TrainConfig cfg = band_id_config();
      cfg.freeze_mu = true;
      cfg.uniform_attention = true;
      ablation_ = run(cfg, "ablation");
    }
    return *ablation_;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::optional<Dataset> data_;
  std::optional<BandIdRun> raw_;
  std::optional<BandIdRun> ablation_;
};

Outcome learning_analog(BandIdSuite& suite) {
  const auto t0 = Clock::now();
  suite.data();
  const BandIdRun& raw = suite.raw_att();
  const BandIdRun& abl = suite.ablation();
  const double secs = seconds_since(t0);
  const bool ok = raw.val_accuracy >= 0.625 && raw.val_accuracy >= abl.val_accuracy - 0.02 &&
                  secs < 15 * 60.0;
  return {ok, "Raw-Att " + fmt("%.4f", raw.val_accuracy) + ", ablation " +
                  fmt("%.4f", abl.val_accuracy) + ", " + fmt("%.0f", secs) + " s"};
}

Outcome attention_interpretability(BandIdSuite& suite) {
  const Network& net = suite.raw_att().result.net;
  const auto t0 = Clock::now();
  std::vector<Utterance> val;
  for (const auto& e : suite.data().items) {
    if (e.split == Split::kVal) val.push_back(e.utt);
  }
  const auto profiles = analyze_attention(net, val);
  std::size_t positive = 0;
  for (const auto& p : profiles) positive += p.spearman > 0.0 ? 1 : 0;
  write_attention_summary(suite.dir() / "raw_att.attention.summary.csv", profiles);
  const double frac = static_cast<double>(positive) / static_cast<double>(profiles.size());
  const double secs = seconds_since(t0);
  return {frac >= 0.8 && secs < 60.0, std::to_string(positive) + "/" +
                                          std::to_string(profiles.size()) +
                                          " val utterances with Spearman > 0 (" +
                                          fmt("%.3f", frac) + "), " + fmt("%.1f", secs) + " s"};
}

Outcome determinism(BandIdSuite& suite) {
  const auto t0 = Clock::now();
  suite.raw_att();
  suite.ablation();
  const std::string a_raw = slurp(suite.dir() / "raw_att.wfck");
  const std::string a_raw_m = slurp(suite.dir() / "raw_att.metrics.jsonl");
  const std::string a_abl = slurp(suite.dir() / "ablation.wfck");
  const std::string a_abl_m = slurp(suite.dir() / "ablation.metrics.jsonl");

  TrainConfig abl_cfg = band_id_config();
  abl_cfg.freeze_mu = true;
  abl_cfg.uniform_attention = true;
  suite.run(band_id_config(), "raw_att_repeat");
  suite.run(abl_cfg, "ablation_repeat");
  const bool same = a_raw == slurp(suite.dir() / "raw_att_repeat.wfck") &&
                    a_raw_m == slurp(suite.dir() / "raw_att_repeat.metrics.jsonl") &&
                    a_abl == slurp(suite.dir() / "ablation_repeat.wfck") &&
                    a_abl_m == slurp(suite.dir() / "ablation_repeat.metrics.jsonl");
  const double secs = seconds_since(t0);
  const double budget = 2.0 * 15 * 60.0;
  return {same && !a_raw.empty() && secs < budget,
          std::string(same ? "checkpoints and metrics bit-identical" : "runs differ") + ", " +
              fmt("%.0f", secs) + " s"};
}

Outcome label_fraction_harness(BandIdSuite& suite) {
  const auto t0 = Clock::now();
  const Dataset& data = suite.data();
  bool counts_ok = true;
  std::ostringstream os;
  for (double frac : {0.7, 0.5, 0.3}) {
    TrainConfig cfg = band_id_config();
    cfg.label_fraction = frac;
    const std::size_t per_class = static_cast<std::size_t>(std::floor(frac * 200 + 1e-9));
    const Dataset sub = subset_labels(data, frac, cfg.seed);
    for (int c = 0; c < 8; ++c) {
      counts_ok &= sub.count(Split::kTrain, c) == per_class;
      counts_ok &= sub.count(Split::kVal, c) == data.count(Split::kVal, c);
    }
    char tag[32];
    std::snprintf(tag, sizeof tag, "fraction_%02d", static_cast<int>(std::lround(frac * 100)));
    const BandIdRun r = suite.run(cfg, tag);
    counts_ok &= r.result.metrics.train_utterances == 8 * per_class;
    counts_ok &= r.result.metrics.epochs.size() == static_cast<std::size_t>(cfg.epochs);
    os << tag << " acc " << fmt("%.4f", r.val_accuracy) << "; ";
  }
  const double secs = seconds_since(t0);
  os << fmt("%.0f", secs) << " s";
  return {counts_ok && secs < 45 * 60.0,
          std::string(counts_ok ? "stratified counts exact; " : "count mismatch; ") + os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string workdir = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Directory for checkpoints and reports");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);
  const std::set<int> selected(only.begin(), only.end());
  auto enabled = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  BandIdSuite suite(workdir);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"kernel spectral fidelity", kernel_spectral_fidelity},
      {"soft-norm variance modulation", variance_modulation},
      {"pipeline shape contract", shape_contract},
      {"overfit one window", overfit_one},
      {"band-ID learning analog", [&] { return learning_analog(suite); }},
      {"attention follows energy", [&] { return attention_interpretability(suite); }},
      {"determinism", [&] { return determinism(suite); }},
      {"label-fraction harness", [&] { return label_fraction_harness(suite); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!enabled(id)) continue;
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    all &= out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << criteria[i].first
              << " -- " << out.detail << std::endl;
  }
  return all ? 0 : 1;
}
