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

#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rawatt/analysis.hpp"
#include "rawatt/error.hpp"
#include "rawatt/feature_io.hpp"
#include "rawatt/gradcheck.hpp"
#include "rawatt/trainer.hpp"

namespace py = pybind11;
using namespace rawatt;

namespace {

Utterance make_utterance(const std::vector<double>& samples, int sample_rate) {
  Utterance u;
  u.samples = samples;
  u.sample_rate = sample_rate;
  return u;
}

FrameBlock make_block(const Eigen::MatrixXd& frames) {
  FrameBlock b;
  b.data = frames;
  b.frame_shift = static_cast<int>(frames.rows());
  return b;
}

FilterbankParams make_params(const Vector& mu, int k) { return {mu, k}; }

NinParams make_nin(const Matrix& w1, const Vector& b1, const Matrix& w2, const Vector& b2) {
  return {w1, b1, w2, b2};
}

std::optional<Split> parse_split(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  throw ArgumentError("split must be train, val or all");
}

py::dict epoch_dict(const EpochMetrics& m) {
  py::dict d;
  d["epoch"] = m.epoch;
  d["train_loss"] = m.train_loss;
  d["best_loss"] = m.best_loss;
  d["train_accuracy"] = m.train_accuracy;
  d["val_accuracy"] = m.val_accuracy;
  d["mu"] = m.mu;
  d["attention"] = m.attention;
  return d;
}

}  // namespace

PYBIND11_MODULE(_rawatt, m) {
  m.doc() = "Learnable Gaussian filterbank front-end with soft self-attention";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);

  // --- signal ---
  m.def(
      "load_wav",
      [](const std::filesystem::path& p) {
        const Utterance u = load_wav(p);
        return py::make_tuple(u.samples, u.sample_rate);
      },
      py::arg("path"), "Returns (samples, sample_rate).");
  m.def(
      "write_wav",
      [](const std::filesystem::path& p, const std::vector<double>& samples, int sr) {
        write_wav(p, make_utterance(samples, sr));
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate") = 16000);
  m.def(
      "frame_signal",
      [](const std::vector<double>& samples, int s, int t, int shift) {
        std::vector<Eigen::MatrixXd> out;
        for (auto& b : frame_signal(make_utterance(samples, 16000), s, t, shift)) {
          out.push_back(std::move(b.data));
        }
        return out;
      },
      py::arg("samples"), py::arg("s") = 400, py::arg("t") = 101, py::arg("shift") = 160,
      "Context windows as s x t arrays, one column per frame.");
  m.def(
      "mel_filterbank_features",
      [](const std::vector<double>& samples, int f, int sr) {
        return mel_filterbank_features(make_utterance(samples, sr), f);
      },
      py::arg("samples"), py::arg("f") = 80, py::arg("sample_rate") = 16000);
  m.def("cmvn_running", &cmvn_running, py::arg("features"), py::arg("window_seconds") = 1.0,
        py::arg("frames_per_second") = 100.0);
  m.def("hz_to_mel", &hz_to_mel);
  m.def("mel_to_hz", &mel_to_hz);

  // --- filterbank ---
  m.def("make_kernel", &make_kernel, py::arg("mu"), py::arg("k") = 129);
  m.def("kernel_grad_mu", &kernel_grad_mu, py::arg("mu"), py::arg("k") = 129);
  m.def(
      "mel_init",
      [](int f, int sr, double lo, double hi, int k) { return mel_init(f, sr, lo, hi, k).mu; },
      py::arg("f"), py::arg("sample_rate") = 16000, py::arg("mu_min") = 0.00375,
      py::arg("mu_max") = 0.475, py::arg("k") = 129);
  m.def(
      "filterbank_forward",
      [](const Eigen::MatrixXd& frames, const Vector& mu, int k) {
        return filterbank_forward(make_block(frames), make_params(mu, k)).x;
      },
      py::arg("frames"), py::arg("mu"), py::arg("k") = 129, "f x t log energies.");
  m.def(
      "filterbank_backward",
      [](const Eigen::MatrixXd& frames, const Vector& mu, int k, const Matrix& upstream) {
        return filterbank_backward(make_block(frames), make_params(mu, k), upstream);
      },
      py::arg("frames"), py::arg("mu"), py::arg("k"), py::arg("upstream"));

  // --- attention ---
  m.def(
      "nin_forward",
      [](const Matrix& x, const Matrix& w1, const Vector& b1, const Matrix& w2, const Vector& b2) {
        return nin_forward(x, make_nin(w1, b1, w2, b2));
      },
      py::arg("x"), py::arg("w1"), py::arg("b1"), py::arg("w2"), py::arg("b2"));
  m.def("apply_attention", &apply_attention, py::arg("x"), py::arg("w"));
  m.def(
      "soft_attention_norm", [](const Matrix& y, double c) { return soft_attention_norm(y, c); },
      py::arg("y"), py::arg("c") = 0.01);
  m.def("prune_center", &prune_center, py::arg("z"), py::arg("t_keep"));

  // --- model ---
  m.def(
      "cross_entropy",
      [](const Vector& logits, int target) {
        const CrossEntropy ce = cross_entropy(logits, target);
        return py::make_tuple(ce.loss, ce.grad);
      },
      py::arg("logits"), py::arg("target"), "Returns (loss, dloss/dlogits).");

  // --- checkpoints and training ---
  py::class_<Network>(m, "Network")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const Network& n, const std::filesystem::path& p) { save_checkpoint(p, n); })
      .def_property_readonly("config",
                             [](const Network& n) { return to_json(n.cfg).dump(); })
      .def_property_readonly("mu", [](const Network& n) { return n.fb.mu; })
      .def(
          "extract",
          [](const Network& n, const std::vector<double>& samples, const std::string& stage) {
            return extract_features(n, make_utterance(samples, n.cfg.sample_rate),
                                    parse_stage(stage));
          },
          py::arg("samples"), py::arg("stage") = "z")
      .def(
          "attention",
          [](const Network& n, const Matrix& x) { return nin_forward(x, n.nin); }, py::arg("x"))
      .def(
          "classify_windows",
          [](const Network& n, const std::vector<double>& samples) {
            return classify_windows(n, make_utterance(samples, n.cfg.sample_rate));
          },
          py::arg("samples"));

  m.def(
      "train",
      [](const std::filesystem::path& manifest, const std::string& config_json,
         std::optional<std::function<void(py::dict)>> on_epoch) {
        TrainConfig cfg = config_from_json(nlohmann::json::parse(config_json));
        TrainOptions opts;
        if (on_epoch) {
          opts.on_epoch = [&](const EpochMetrics& em) { (*on_epoch)(epoch_dict(em)); };
        }
        const TrainResult res = train(load_manifest(manifest), cfg, opts);
        py::list epochs;
        for (const auto& em : res.metrics.epochs) epochs.append(epoch_dict(em));
        return py::make_tuple(res.net, epochs);
      },
      py::arg("manifest"), py::arg("config_json") = "{}", py::arg("on_epoch") = py::none(),
      "Trains on a JSON-lines manifest. Returns (Network, per-epoch metrics).");
  m.def(
      "evaluate",
      [](const Network& n, const std::filesystem::path& manifest, const std::string& split) {
        const EvalResult r = evaluate(n, load_manifest(manifest), parse_split(split));
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["utterances"] = r.utterances;
        d["confusion"] = r.confusion;
        return d;
      },
      py::arg("network"), py::arg("manifest"), py::arg("split") = "val");
  m.def(
      "synth",
      [](const std::filesystem::path& out, int per_class, std::uint64_t seed) {
        Dataset data = generate_dataset(band_id_task(8, 400.0, 200.0, 10.0, seed), per_class);
        export_dataset(out, data);
        return data.items.size();
      },
      py::arg("out"), py::arg("per_class") = 250, py::arg("seed") = 0,
      "Writes the 8-class band-ID corpus; returns the utterance count.");

  // --- analysis ---
  m.def(
      "analyze_filters",
      [](const Network& n) {
        std::vector<std::tuple<int, double, double>> rows;
        for (const auto& r : analyze_filters(n)) rows.emplace_back(r.rank, r.learned_hz, r.mel_reference_hz);
        return rows;
      },
      py::arg("network"), "(rank, learned_hz, mel_reference_hz) rows.");
  m.def(
      "analyze_attention",
      [](const Network& n, const std::vector<double>& samples) {
        const AttentionProfile p = analyze_attention(n, make_utterance(samples, n.cfg.sample_rate));
        py::dict d;
        d["attention_norm"] = p.attention_norm;
        d["energy_norm"] = p.energy_norm;
        d["pearson"] = p.pearson;
        d["spearman"] = p.spearman;
        return d;
      },
      py::arg("network"), py::arg("samples"));
  m.def(
      "gradcheck",
      [](std::uint64_t seed, const std::string& corrupt) {
        GradcheckOptions opts;
        opts.seed = seed;
        opts.corrupt_block = corrupt;
        std::vector<std::tuple<std::string, double, bool>> out;
        for (const auto& b : run_gradcheck(opts).blocks) out.emplace_back(b.name, b.max_rel_error, b.pass);
        return out;
      },
      py::arg("seed") = 0, py::arg("corrupt") = "", "(block, max_rel_error, pass) per block.");
  m.def("read_wfb1", &read_wfb1, py::arg("path"));
  m.def("write_wfb1", &write_wfb1, py::arg("path"), py::arg("matrix"));
}
