/*
 * Copyright 2026 The InCTRL-cpp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "inctrl/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "inctrl/config.hpp"
#include "inctrl/data.hpp"
#include "inctrl/detector.hpp"
#include "inctrl/error.hpp"
#include "inctrl/eval.hpp"
#include "inctrl/training.hpp"
#include "inctrl/visualize.hpp"

namespace inctrl {
namespace {

namespace fs = std::filesystem;
constexpr char kModule[] = "cli";

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  bool print_config = false;
};

void AddCommon(CLI::App* cmd, CommonOptions* o) {
  cmd->add_option("--config", o->config, "Configuration file (JSON, comments allowed)");
  cmd->add_option("--set", o->sets, "Override one key, e.g. --set training.epochs=5")
      ->take_all();
  cmd->add_flag("--print-config", o->print_config,
                "Print the merged configuration with provenance");
}

void RequireFile(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::is_regular_file(path)) {
    Fail(ErrorKind::kUsage, kModule, what + " not found: '" + path + "'");
  }
}

void RequireDirectory(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::is_directory(path)) {
    Fail(ErrorKind::kUsage, kModule, what + " not found: '" + path + "'");
  }
}

std::vector<long long> ParseIntList(const std::string& text, const std::string& flag) {
  std::vector<long long> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      Fail(ErrorKind::kUsage, kModule,
           flag + " expects comma-separated integers, got '" + text + "'");
    }
  }
  if (out.empty()) Fail(ErrorKind::kUsage, kModule, flag + " is empty");
  return out;
}

// defaults < checkpoint snapshot < file (INCTRL_CONFIG or --config) < flags.
RunConfig BuildConfig(const CommonOptions& common, const nlohmann::json* snapshot,
                      const std::vector<std::pair<std::string, nlohmann::json>>& flags) {
  RunConfig config;
  if (snapshot != nullptr) config.Merge(*snapshot, ConfigSource::kCheckpoint);
  std::string file = common.config;
  if (file.empty()) {
    if (const char* env = std::getenv("INCTRL_CONFIG"); env != nullptr && *env) {
      file = env;
    }
  }
  if (!file.empty()) config.MergeFile(file);
  for (const auto& [key, value] : flags) {
    config.Set(key, value, ConfigSource::kFlag, "--" + key);
  }
  for (const auto& s : common.sets) config.Set(s);
  config.Validate();
  return config;
}

DatasetManifest LoadProtocolManifest(const std::string& path, const RunConfig& config) {
  return BuildProtocol(LoadManifest(path), ToProtocolSpec(config));
}

struct LoadedModel {
  RunConfig config;
  Checkpoint checkpoint;
  std::unique_ptr<Detector> detector;
};

LoadedModel LoadModel(const std::string& ckpt_dir, const CommonOptions& common,
                      const std::vector<std::pair<std::string, nlohmann::json>>& flags) {
  RequireDirectory(ckpt_dir, "checkpoint directory");
  LoadedModel m;
  m.checkpoint = LoadCheckpoint(ckpt_dir);
  nlohmann::json snapshot = nlohmann::json::object();
  if (m.checkpoint.config.is_object()) {
    const auto sections = RunConfig().ModelSnapshot();
    for (const auto& [k, v] : m.checkpoint.config.items()) {
      if (sections.contains(k)) snapshot[k] = v;
    }
  }
  m.config = BuildConfig(common, &snapshot, flags);
  auto backend = MakeBackend(m.config);
  if (backend->identifier() != m.checkpoint.backend_id) {
    Fail(ErrorKind::kIncompatibleCheckpoint, "training",
         "checkpoint was trained with backend '" + m.checkpoint.backend_id +
             "', configured backend is '" + backend->identifier() + "'");
  }
  auto features =
      std::make_shared<const FeatureCache>(backend, ToPreprocessConfig(m.config));
  ModelConfig model = ToModelConfig(m.config);
  ModelParams params = m.checkpoint.params;
  params.scorer.alpha = model.alpha;
  m.detector = std::make_unique<Detector>(features, model, std::move(params));
  return m;
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string ClassLabelFor(const RunConfig& config, const std::string& flag) {
  if (!flag.empty()) return flag;
  const auto label = config.at("text_prior.class_label").get<std::string>();
  return label.empty() ? std::string(kDefaultClassLabel) : label;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Few-shot generalist anomaly detection with in-context residuals",
               "inctrl"};
  app.require_subcommand(1);

  CommonOptions common;

  // train
  auto* train = app.add_subcommand("train", "Fit adapter and heads on auxiliary data");
  std::string train_data;
  std::string train_out;
  int train_epochs = 0;
  int train_k = 0;
  long long train_seed = 0;
  train->add_option("--data", train_data, "Training manifest (CSV)")->required();
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  auto* opt_epochs = train->add_option("--epochs", train_epochs, "training.epochs");
  auto* opt_train_k = train->add_option("--k", train_k, "training.k");
  auto* opt_seed = train->add_option("--seed", train_seed, "training.seed");
  AddCommon(train, &common);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a target manifest");
  std::string eval_ckpt;
  std::string eval_data;
  std::string eval_out = ".";
  int eval_k = 0;
  std::string eval_seeds;
  int eval_classes = 0;
  std::string eval_sweep;
  bool eval_per_category = false;
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint directory")->required();
  eval->add_option("--data", eval_data, "Target manifest (CSV)")->required();
  eval->add_option("--out", eval_out, "Directory for report.json and report.csv");
  auto* opt_eval_k = eval->add_option("--k", eval_k, "eval.k");
  auto* opt_eval_seeds = eval->add_option("--seeds", eval_seeds, "eval.seeds, e.g. 1,2,3");
  auto* opt_classes = eval->add_option("--class-count", eval_classes, "eval.class_count");
  eval->add_option("--sweep", eval_sweep,
                   "Prompt class counts for a diversity sweep, e.g. 1,2,4");
  auto* opt_per_cat = eval->add_flag("--per-category", eval_per_category, "eval.per_category");
  AddCommon(eval, &common);

  // score
  auto* score = app.add_subcommand("score", "Score query images against normal prompts");
  std::string score_ckpt;
  std::vector<std::string> score_images;
  std::vector<std::string> score_prompts;
  std::string score_label;
  score->add_option("--ckpt", score_ckpt, "Checkpoint directory")->required();
  score->add_option("--image", score_images, "Query image(s)")->required();
  score->add_option("--prompts", score_prompts, "K normal prompt images")->required();
  score->add_option("--class-label", score_label, "Class name for text prompts");
  AddCommon(score, &common);

  // visualize
  auto* vis = app.add_subcommand("visualize", "Write holistic residual heatmaps");
  std::string vis_ckpt;
  std::vector<std::string> vis_images;
  std::vector<std::string> vis_prompts;
  std::string vis_out;
  std::string vis_label;
  int vis_size = 0;
  vis->add_option("--ckpt", vis_ckpt, "Checkpoint directory")->required();
  vis->add_option("--image", vis_images, "Query image(s)")->required();
  vis->add_option("--prompts", vis_prompts, "K normal prompt images")->required();
  vis->add_option("--out", vis_out, "Output directory")->required();
  vis->add_option("--class-label", vis_label, "Class name for text prompts");
  vis->add_option("--size", vis_size, "Heatmap side in pixels (default: input resolution)");
  AddCommon(vis, &common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error [cli]: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      std::vector<std::pair<std::string, nlohmann::json>> flags;
      if (opt_epochs->count()) flags.emplace_back("training.epochs", train_epochs);
      if (opt_train_k->count()) flags.emplace_back("training.k", train_k);
      if (opt_seed->count()) flags.emplace_back("training.seed", train_seed);
      RequireFile(train_data, "training manifest");
      const RunConfig config = BuildConfig(common, nullptr, flags);
      if (common.print_config) out << config.Describe();
      const DatasetManifest data = LoadProtocolManifest(train_data, config);
      auto features = std::make_shared<const FeatureCache>(MakeBackend(config),
                                                           ToPreprocessConfig(config));
      Checkpoint ckpt = Fit(data, *features, ToModelConfig(config), ToTrainConfig(config));
      ckpt.config = config.tree();
      SaveCheckpoint(ckpt, train_out);
      out << "trained " << ckpt.loss_history.size() << " steps over " << ckpt.epochs
          << " epochs";
      if (!ckpt.loss_history.empty()) {
        out << ", final loss " << Fmt("%.6g", ckpt.loss_history.back());
      }
      out << "; checkpoint written to " << train_out << "\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      std::vector<std::pair<std::string, nlohmann::json>> flags;
      if (opt_eval_k->count()) flags.emplace_back("eval.k", eval_k);
      if (opt_eval_seeds->count()) {
        flags.emplace_back("eval.seeds", ParseIntList(eval_seeds, "--seeds"));
      }
      if (opt_classes->count()) flags.emplace_back("eval.class_count", eval_classes);
      if (opt_per_cat->count()) flags.emplace_back("eval.per_category", eval_per_category);
      std::vector<long long> sweep;
      if (!eval_sweep.empty()) sweep = ParseIntList(eval_sweep, "--sweep");
      RequireFile(eval_data, "target manifest");
      LoadedModel m = LoadModel(eval_ckpt, common, flags);
      if (common.print_config) out << m.config.Describe();
      const DatasetManifest target = LoadProtocolManifest(eval_data, m.config);
      const EvalOptions options = ToEvalOptions(m.config);

      auto print = [&](const EvalReport& r) {
        out << r.dataset << "\tK=" << r.k;
        if (r.class_count) out << "\tclasses=" << *r.class_count;
        out << "\tAUROC " << Fmt("%.4f", r.auroc.mean) << "±" << Fmt("%.4f", r.auroc.std)
            << "\tAUPRC " << Fmt("%.4f", r.auprc.mean) << "±" << Fmt("%.4f", r.auprc.std)
            << "\n";
      };
      if (sweep.empty()) {
        const EvalReport report = Evaluate(*m.detector, target, options);
        SaveReport(report, eval_out);
        print(report);
      } else {
        std::vector<int> counts(sweep.begin(), sweep.end());
        for (const auto& point : PromptDiversitySweep(*m.detector, target, options, counts)) {
          SaveReport(point.report,
                     fs::path(eval_out) / ("class_count_" + std::to_string(point.class_count)));
          print(point.report);
        }
      }
      return kExitOk;
    }

    const bool is_score = score->parsed();
    const auto& images = is_score ? score_images : vis_images;
    const auto& prompts = is_score ? score_prompts : vis_prompts;
    for (const auto& p : images) RequireFile(p, "query image");
    for (const auto& p : prompts) RequireFile(p, "prompt image");
    LoadedModel m = LoadModel(is_score ? score_ckpt : vis_ckpt, common, {});
    if (common.print_config) out << m.config.Describe();
    const auto& features = m.detector->features();
    const auto prompt_tokens = features.EncodeAll(prompts);
    const TextPrototypes& text =
        m.detector->TextFor(ClassLabelFor(m.config, is_score ? score_label : vis_label));

    if (is_score) {
      for (const auto& image : images) {
        const auto b = m.detector->Score(features.Encode(image), prompt_tokens, text);
        out << image << "\t" << Fmt("%.17g", b.score) << "\n";
      }
      return kExitOk;
    }

    const int size = vis_size > 0 ? vis_size : features.preprocess().resolution;
    std::map<std::string, int> used;
    for (const auto& image : images) {
      const auto b = m.detector->Score(features.Encode(image), prompt_tokens, text);
      std::string stem = fs::path(image).stem().string();
      if (const int n = used[stem]++; n > 0) stem += "_" + std::to_string(n);
      const fs::path png = fs::path(vis_out) / (stem + "_heatmap.png");
      std::error_code ec;
      fs::create_directories(vis_out, ec);
      if (ec) Fail(ErrorKind::kPersistence, kModule, "cannot create " + vis_out);
      EmitResidualVisualization(b, size, png);
      out << image << "\t" << png.string() << "\t" << Fmt("%.17g", b.score) << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.kind() == ErrorKind::kUsage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "internal error [cli]: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace inctrl
