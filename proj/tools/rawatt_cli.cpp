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

// rawatt: synthesize data, train and evaluate the attention filterbank
// front-end, extract features and run the diagnostic reports.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rawatt/analysis.hpp"
#include "rawatt/dataset.hpp"
#include "rawatt/error.hpp"
#include "rawatt/feature_io.hpp"
#include "rawatt/gradcheck.hpp"
#include "rawatt/trainer.hpp"

namespace fs = std::filesystem;
using namespace rawatt;

namespace {

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

std::optional<Split> parse_split(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  throw ArgumentError("--split must be train, val or all");
}

std::vector<Utterance> load_inputs(const std::vector<std::string>& inputs,
                                   std::optional<Split> split) {
  std::vector<Utterance> out;
  for (const auto& in : inputs) {
    if (fs::path(in).extension() == ".jsonl") {
      for (auto& e : load_manifest(in).items) {
        if (!split || e.split == *split) out.push_back(std::move(e.utt));
      }
    } else {
      out.push_back(load_wav(in));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learnable cosine-modulated Gaussian filterbank with soft self-attention"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_path, stage_name = "z", format = "bin";
  std::string mu_init_path, split_name = "val", corrupt;
  std::uint64_t seed = 0;
  double fraction = 1.0;
  bool freeze_mu = false;
  int per_class = 250;
  std::vector<std::string> inputs;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic band-ID corpus as WAV + manifest");
  synth->add_option("--config", config_path, "Synthetic task JSON (default: 8-class band-ID)");
  synth->add_option("--seed", seed, "Generation seed");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--per-class", per_class, "Utterances per class (80/20 train/val)");

  auto* train_cmd = app.add_subcommand("train", "Train on a manifest and write a checkpoint");
  train_cmd->add_option("manifest", inputs, "Dataset manifest (JSON lines)")->required();
  train_cmd->add_option("--config", config_path, "Training config JSON");
  auto* seed_opt = train_cmd->add_option("--seed", seed, "Seed (overrides the config)");
  train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
  auto* fraction_opt =
      train_cmd->add_option("--fraction", fraction, "Labeled fraction of training data")
          ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_flag("--freeze-mu", freeze_mu, "Keep filter center frequencies fixed");
  train_cmd->add_option("--mu-init", mu_init_path, "Initial center frequencies (CSV)");

  auto* eval_cmd = app.add_subcommand("eval", "Utterance accuracy and confusion matrix");
  eval_cmd->add_option("manifest", inputs, "Dataset manifest")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path)->required();
  eval_cmd->add_option("--split", split_name, "train, val or all");
  eval_cmd->add_option("--out", out_path, "JSON result path (default: stdout)");

  auto* extract = app.add_subcommand("extract", "Emit x, y, z or mel features for one WAV file");
  extract->add_option("wav", inputs, "Input WAV")->required();
  extract->add_option("--checkpoint", checkpoint_path, "Checkpoint (x, y, z stages)");
  extract->add_option("--config", config_path, "Config used when no checkpoint is given");
  extract->add_option("--stage", stage_name, "x | y | z | mel");
  extract->add_option("--format", format, "bin | csv | pgm")
      ->check(CLI::IsMember({"bin", "csv", "pgm"}));
  extract->add_option("--out", out_path)->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  gradcheck->add_option("--seed", seed);
  gradcheck->add_option("--corrupt", corrupt, "Test hook: corrupt one block's analytic gradient");

  auto* filters = app.add_subcommand("analyze-filters", "Learned vs mel center frequencies");
  filters->add_option("--checkpoint", checkpoint_path)->required();
  filters->add_option("--out", out_path, "CSV path")->required();

  auto* attention = app.add_subcommand("analyze-attention",
                                       "Attention weights vs sub-band energy per utterance");
  attention->add_option("inputs", inputs, "WAV files or manifests")->required();
  attention->add_option("--checkpoint", checkpoint_path)->required();
  attention->add_option("--split", split_name, "Manifest split: train, val or all");
  attention->add_option("--out", out_path, "Report CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      SynthTask task = band_id_task();
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw FormatError("cannot open " + config_path);
        task = synth_task_from_json(nlohmann::json::parse(in));
      }
      if (synth->count("--seed")) task.seed = seed;
      Dataset data = generate_dataset(task, per_class);
      export_dataset(out_path, data);
      std::ofstream(fs::path(out_path) / "task.json") << to_json(task).dump(2) << '\n';
      std::cout << "wrote " << data.items.size() << " utterances to " << out_path << '\n';
    } else if (train_cmd->parsed()) {
      TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_config(config_path);
      if (seed_opt->count()) cfg.seed = seed;
      if (fraction_opt->count()) cfg.label_fraction = fraction;
      if (freeze_mu) cfg.freeze_mu = true;
      const Dataset data = load_manifest(inputs.front());
      TrainOptions opts;
      if (!mu_init_path.empty()) opts.mu_init = read_mu_csv(mu_init_path);
      opts.on_epoch = [](const EpochMetrics& m) {
        std::cout << "epoch " << m.epoch << " loss " << m.train_loss << " train_acc "
                  << m.train_accuracy << " val_acc " << m.val_accuracy << std::endl;
      };
      const TrainResult res = train(data, cfg, opts);
      save_checkpoint(out_path, res.net);
      write_metrics_jsonl(with_suffix(out_path, ".metrics.jsonl"), res.metrics);
      write_metrics_csv(with_suffix(out_path, ".metrics.csv"), res.metrics);
      write_mu_csv(with_suffix(out_path, ".mu.csv"),
                   {res.net.fb.mu.data(), static_cast<std::size_t>(res.net.fb.mu.size())});
    } else if (eval_cmd->parsed()) {
      const Network net = load_checkpoint(checkpoint_path);
      const EvalResult res = evaluate(net, load_manifest(inputs.front()), parse_split(split_name));
      const nlohmann::json j = {
          {"accuracy", res.accuracy}, {"utterances", res.utterances}, {"confusion", res.confusion}};
      if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        std::ofstream(out_path) << j.dump(2) << '\n';
      }
    } else if (extract->parsed()) {
      const Stage stage = parse_stage(stage_name);
      Network net;
      if (!checkpoint_path.empty()) {
        net = load_checkpoint(checkpoint_path);
      } else if (stage == Stage::kMel) {
        net.cfg = config_path.empty() ? TrainConfig{} : load_config(config_path);
      } else {
        throw ArgumentError("--checkpoint is required for stages x, y and z");
      }
      const Matrix feat = extract_features(net, load_wav(inputs.front()), stage);
      if (format == "bin") {
        write_wfb1(out_path, feat);
      } else if (format == "csv") {
        write_feature_csv(out_path, feat);
      } else {
        write_pgm(out_path, feat);
      }
    } else if (gradcheck->parsed()) {
      GradcheckOptions opts;
      opts.seed = seed;
      opts.corrupt_block = corrupt;
      const GradcheckReport report = run_gradcheck(opts);
      print_report(std::cout, report);
      return report.pass() ? 0 : 1;
    } else if (filters->parsed()) {
      write_filter_report(out_path, analyze_filters(load_checkpoint(checkpoint_path)));
    } else if (attention->parsed()) {
      const Network net = load_checkpoint(checkpoint_path);
      const auto profiles = analyze_attention(net, load_inputs(inputs, parse_split(split_name)));
      write_attention_report(out_path, profiles);
      write_attention_summary(with_suffix(out_path, ".summary.csv"), profiles);
      write_attention_dump(with_suffix(out_path, ".weights.csv"), profiles);
      std::size_t positive = 0;
      for (const auto& p : profiles) positive += p.spearman > 0.0 ? 1 : 0;
      std::cout << positive << " of " << profiles.size()
                << " utterances with positive Spearman correlation\n";
    }
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
