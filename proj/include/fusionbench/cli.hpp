// Copyright 2026 The fusionbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Command-line front end: generate, train, eval, crossval, gradcheck.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numeric failure.
// Option precedence: command-line flag > --config JSON > FUSIONBENCH_SEED
// (seed only) > built-in default.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fusionbench/data.hpp"
#include "fusionbench/error.hpp"
#include "fusionbench/gradcheck_suite.hpp"
#include "fusionbench/metrics.hpp"
#include "fusionbench/models.hpp"
#include "fusionbench/report.hpp"
#include "fusionbench/train.hpp"

namespace fusionbench::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kNumeric = 3 };

inline constexpr const char* kSeedEnv = "FUSIONBENCH_SEED";

struct RunConfig {
  std::string command;
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  bool synthetic = true;
  std::vector<std::string> features;  // "path" or "name=path"
  std::string labels;
  std::string modality = "1";          // unimodal: 1-based index or name
  std::string embed_hidden = "16";
  std::string head_hidden = "16";
  std::string model_kind = "dof";
  std::string mode = "complementary";
  std::string optimizer = "adam";
  std::string out = "fusionbench-out";
  std::string model_file;
  std::string split = "test";
  std::string config_file;
  bool corrupt_gradient = false;
  bool seed_given = false;  // by flag, config or environment
};

namespace detail {

inline void add_seed(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--seed", rc.train.seed, "RNG seed (falls back to $FUSIONBENCH_SEED)");
}

inline void add_synth_options(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--mode", rc.mode, "synthetic task: complementary | redundant");
  sub->add_option("--dim", rc.synth.dim, "per-modality dimension");
  sub->add_option("--noise", rc.synth.noise, "Gaussian noise std");
  sub->add_option("--n", rc.synth.samples, "sample count");
  sub->add_option("--balance", rc.synth.balance, "positive class proportion");
}

inline void add_data_options(CLI::App* sub, RunConfig& rc) {
  add_synth_options(sub, rc);
  sub->add_option("--features", rc.features,
                  "embedding TSV per modality, 'path' or 'name=path' (repeatable)");
  sub->add_option("--labels", rc.labels, "label TSV");
}

inline void add_model_options(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--model", rc.model_kind, "unimodal | lrc | dof");
  sub->add_option("--modality", rc.modality, "modality for --model unimodal (1-based or name)");
  sub->add_option("--l1", rc.model.l1, "shared latent width");
  sub->add_option("--l2", rc.model.l2, "gated embedding width");
  sub->add_option("--embed-hidden", rc.embed_hidden, "hidden widths of each unimodal net, comma-separated");
  sub->add_option("--head-hidden", rc.head_hidden, "hidden widths of the fused head, comma-separated");
  sub->add_option("--lrc-out", rc.model.lrc_out, "width of the LRC concatenation layer");
  sub->add_option("--cae-kernels", rc.model.cae_kernels, "CAE convolution channels");
  sub->add_option("--cae-kernel", rc.model.cae_kernel, "CAE kernel width");
  sub->add_option("--cae-pool", rc.model.cae_pool, "CAE pool window");
  sub->add_option("--cae-lambda", rc.model.cae_lambda, "CAE L2 weight");
  sub->add_option("--recon-weight", rc.model.recon_weight, "weight of the reconstruction term (lrc)");
  sub->add_option("--pretrain-epochs", rc.model.pretrain_epochs,
                  "reconstruction-only epochs before joint training (lrc)");
}

inline void add_train_options(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--epochs", rc.train.epochs, "training epochs");
  sub->add_option("--batch-size", rc.train.batch_size, "minibatch size");
  sub->add_option("--lr", rc.train.lr, "initial learning rate");
  sub->add_option("--dropout", rc.train.dropout, "dropout rate on hidden layers");
  sub->add_option("--clip-norm", rc.train.clip_norm, "global gradient-norm clip threshold");
  sub->add_option("--gamma", rc.train.gamma, "MMO loss weight");
  sub->add_option("--optimizer", rc.optimizer, "adam | adagrad");
  sub->add_option("--lr-schedule", rc.train.lr_schedule, "linear decay to 10% (true/false)");
}

// Turns a flat JSON object into "--key value" pairs for options `sub` knows.
inline std::vector<std::string> config_args(const json& j, CLI::App* sub) {
  const json& flat = j.contains("config") && j["config"].is_object() ? j["config"] : j;
  std::vector<std::string> args;
  for (const auto& [key, value] : flat.items()) {
    if (sub->get_option_no_throw("--" + key) == nullptr || key == "config") continue;
    auto push = [&](const std::string& v) {
      args.push_back("--" + key);
      args.push_back(v);
    };
    if (value.is_array()) {
      for (const auto& v : value) push(v.is_string() ? v.get<std::string>() : v.dump());
    } else if (value.is_string()) {
      push(value.get<std::string>());
    } else {
      push(value.dump());
    }
  }
  return args;
}

inline void resolve(RunConfig& rc, CLI::App* sub) {
  rc.seed_given = sub->count("--seed") > 0;
  if (!rc.seed_given) {
    if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
      try {
        std::size_t used = 0;
        rc.train.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
        rc.seed_given = true;
      } catch (const std::exception&) {
        throw ValidationError(std::string(kSeedEnv) + " is not an unsigned integer: '" + env + "'");
      }
    }
  }
  rc.synth.seed = rc.train.seed;
  rc.synth.mode = parse_synth_mode(rc.mode);
  rc.model.kind = parse_model_kind(rc.model_kind);
  rc.model.embed_hidden = parse_widths(rc.embed_hidden);
  rc.model.head_hidden = parse_widths(rc.head_hidden);
  if (rc.optimizer == "adam") {
    rc.train.optimizer = OptimizerKind::adam;
  } else if (rc.optimizer == "adagrad") {
    rc.train.optimizer = OptimizerKind::adagrad;
  } else {
    throw ValidationError("unknown optimizer '" + rc.optimizer + "'");
  }
  const bool files = !rc.features.empty() || !rc.labels.empty();
  const bool synth_flags = sub->get_option_no_throw("--mode") != nullptr &&
                           (sub->count("--mode") || sub->count("--dim") || sub->count("--noise") ||
                            sub->count("--n") || sub->count("--balance"));
  if (files && synth_flags) {
    throw ValidationError("synthetic options (--mode/--dim/--noise/--n/--balance) and "
                          "--features/--labels are mutually exclusive");
  }
  if (files) {
    if (rc.features.empty() || rc.labels.empty()) {
      throw ValidationError("--features and --labels must be given together");
    }
    rc.synthetic = false;
  }
}

inline std::vector<ModalityFile> modality_files(const RunConfig& rc) {
  std::vector<ModalityFile> files;
  for (const auto& f : rc.features) {
    auto eq = f.find('=');
    ModalityFile mf;
    if (eq == std::string::npos) {
      mf.path = f;
      mf.name = mf.path.stem().string();
    } else {
      mf.name = f.substr(0, eq);
      mf.path = f.substr(eq + 1);
    }
    if (!std::filesystem::exists(mf.path)) throw IoError("feature file '" + mf.path.string() + "' does not exist");
    files.push_back(std::move(mf));
  }
  return files;
}

inline Dataset load_data(const RunConfig& rc, json& provenance) {
  if (rc.synthetic) {
    write_synth_config(provenance, rc.synth);
    provenance["data"] = "synthetic";
    return generate_synthetic(rc.synth);
  }
  auto files = modality_files(rc);
  if (!std::filesystem::exists(rc.labels)) throw IoError("label file '" + rc.labels + "' does not exist");
  provenance["data"] = "files";
  provenance["features"] = rc.features;
  provenance["labels"] = rc.labels;
  Dataset ds = load_embeddings(files, rc.labels);
  ds.validate();
  return ds;
}

inline std::size_t resolve_modality(const std::string& spec, const Dataset& ds) {
  try {
    std::size_t used = 0;
    unsigned long v = std::stoul(spec, &used);
    if (used == spec.size()) {
      if (v == 0 || v > ds.modality_count()) {
        throw ValidationError("--modality " + spec + " out of range 1.." +
                              std::to_string(ds.modality_count()));
      }
      return v - 1;
    }
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  return ds.modality_index(spec);
}

inline std::filesystem::path prepare_out(const std::string& out) {
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + out + "'");
  }
  return dir;
}

inline json base_config(const RunConfig& rc) {
  json j;
  j["command"] = rc.command;
  write_model_config(j, rc.model);
  write_train_config(j, rc.train);
  return j;
}

// ---------------------------------------------------------------------------

inline int cmd_generate(RunConfig& rc, std::ostream& out) {
  auto dir = prepare_out(rc.out);
  Dataset ds = generate_synthetic(rc.synth);
  std::filesystem::path labels;
  auto files = write_dataset(ds, dir, &labels);
  json manifest;
  manifest["command"] = "generate";
  write_synth_config(manifest, rc.synth);
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.path.filename().string());
  manifest["features"] = names;
  manifest["labels"] = labels.filename().string();
  manifest["modalities"] = ds.modality_names;
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << ds.size() << " samples to " << dir.string() << "\n";
  return kOk;
}

inline int cmd_train(RunConfig& rc, std::ostream& out) {
  json report = base_config(rc);
  Dataset ds = load_data(rc, report);
  if (rc.model.kind == ModelKind::unimodal) {
    rc.model.modality = resolve_modality(rc.modality, ds);
    report["modality"] = rc.model.modality + 1;
  }
  auto dir = prepare_out(rc.out);
  Split split = split_dataset(ds, rc.train.seed);
  FusionModel model = FusionModel::create(rc.model, input_dims_of(ds), rc.train.seed);
  auto t0 = std::chrono::steady_clock::now();
  TrainHistory hist = train(model, ds, split.train, split.val, rc.train);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MetricsReport test = evaluate(model, ds, split.test);

  write_metrics(report, test);
  report["n-train"] = split.train.size();
  report["n-val"] = split.val.size();
  report["n-test"] = split.test.size();
  report["best-epoch"] = hist.best_epoch;
  report["final-train-loss"] = hist.train_loss.empty() ? 0.0 : hist.train_loss.back();
  report["final-val-loss"] = hist.val_loss.empty() ? 0.0 : hist.val_loss.back();
  report["train-seconds"] = seconds;
  write_text_file(dir / "model.json", model_to_json(model, ds, rc.train.seed).dump() + "\n");
  write_text_file(dir / "report.json", report.dump(2) + "\n");
  std::string text = "test split (" + std::to_string(split.test.size()) + " samples)\n" +
                     metrics_table({{model_kind_name(rc.model.kind), test}}) +
                     "configuration\n" + config_lines(report);
  write_text_file(dir / "report.txt", text);
  out << metrics_table({{model_kind_name(rc.model.kind), test}});
  return kOk;
}

inline int cmd_eval(RunConfig& rc, std::ostream& out) {
  if (rc.model_file.empty()) throw ValidationError("eval: --model-file is required");
  if (!std::filesystem::exists(rc.model_file)) throw IoError("model file '" + rc.model_file + "' does not exist");
  LoadedModel loaded = model_from_json(read_json_file(rc.model_file));
  rc.model = loaded.model.config();
  // Without an explicit seed, reproduce the split the model was trained with.
  if (!rc.seed_given) rc.train.seed = loaded.seed;
  rc.synth.seed = rc.train.seed;
  json report = base_config(rc);
  report["model-file"] = rc.model_file;
  report["split"] = rc.split;
  Dataset ds = load_data(rc, report);
  if (ds.modality_names != loaded.modality_names) {
    throw ValidationError("dataset modalities do not match the model's");
  }
  std::vector<std::size_t> idx;
  if (rc.split == "test") {
    idx = split_dataset(ds, rc.train.seed).test;
  } else if (rc.split == "all") {
    idx = all_indices(ds);
  } else {
    throw ValidationError("--split must be 'test' or 'all'");
  }
  MetricsReport r = evaluate(loaded.model, ds, idx);
  write_metrics(report, r);
  report["n-eval"] = idx.size();
  auto dir = prepare_out(rc.out);
  write_text_file(dir / "eval.json", report.dump(2) + "\n");
  std::string table = metrics_table({{model_kind_name(rc.model.kind), r}});
  write_text_file(dir / "eval.txt", table + "configuration\n" + config_lines(report));
  out << table;
  return kOk;
}

inline int cmd_crossval(RunConfig& rc, std::ostream& out) {
  json report = base_config(rc);
  Dataset ds = load_data(rc, report);
  if (rc.model.kind == ModelKind::unimodal) {
    rc.model.modality = resolve_modality(rc.modality, ds);
    report["modality"] = rc.model.modality + 1;
  }
  auto dir = prepare_out(rc.out);
  const auto dims = input_dims_of(ds);
  CrossValResult cv = kfold_cv(
      [&](std::uint64_t seed) { return FusionModel::create(rc.model, dims, seed); }, ds, rc.train);

  // Per-fold rows are flattened to "fold-<k>-<metric>" keys to keep the
  // report a single flat object.
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (std::size_t f = 0; f < cv.reports.size(); ++f) {
    json row;
    row["size"] = cv.folds[f].size();
    write_metrics(row, cv.reports[f]);
    const std::string key = "fold-" + std::to_string(f + 1) + "-";
    for (const auto& [k, v] : row.items()) report[key + k] = v;
    rows.emplace_back("fold " + std::to_string(f + 1), cv.reports[f]);
  }
  report["fold-count"] = cv.reports.size();
  report["mean-f1"] = cv.mean_f1;
  report["std-f1"] = cv.std_f1;
  write_text_file(dir / "crossval.json", report.dump(2) + "\n");

  std::string table = metrics_table(rows);
  char agg[128];
  std::snprintf(agg, sizeof(agg), "%-12s f1 = %.4f +/- %.4f\n", "mean", cv.mean_f1, cv.std_f1);
  table += agg;
  write_text_file(dir / "crossval.txt", table + "configuration\n" + config_lines(report));
  out << table;
  return kOk;
}

inline int cmd_gradcheck(RunConfig& rc, std::ostream& out) {
  auto t0 = std::chrono::steady_clock::now();
  auto rows = run_gradcheck_suite(rc.train.seed, rc.corrupt_gradient ? 1e-3 : 0.0);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-28s %14s %8s\n", "check", "max rel error", "status");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-28s %14.3e %8s\n", r.name.c_str(), r.result.max_rel_error,
                  r.passed ? "pass" : "FAIL");
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "tolerance %.0e, eps %.0e, seed %llu, %.3f s\n", kGradCheckTolerance,
                kGradCheckEps, static_cast<unsigned long long>(rc.train.seed), seconds);
  out << buf;
  return all_passed(rows) ? kOk : kNumeric;
}

}  // namespace detail

/// Parses and runs one command. args[0] is the program name.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  RunConfig rc;
  CLI::App app{"fusionbench: multimodal fusion toolkit (LRC, DOF, unimodal baselines)"};
  app.name("fusionbench");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* gen = app.add_subcommand("generate", "write a synthetic multimodal dataset");
  auto* trn = app.add_subcommand("train", "train a model and evaluate it on the test split");
  auto* evl = app.add_subcommand("eval", "evaluate a saved model");
  auto* cv = app.add_subcommand("crossval", "k-fold cross-validation");
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");

  for (auto* sub : {gen, trn, evl, cv, gc}) {
    detail::add_seed(sub, rc);
    sub->add_option("--config", rc.config_file, "JSON file with option defaults");
  }
  for (auto* sub : {gen, trn, evl, cv}) sub->add_option("--out", rc.out, "output directory");
  detail::add_synth_options(gen, rc);
  for (auto* sub : {trn, evl, cv}) {
    detail::add_data_options(sub, rc);
    detail::add_model_options(sub, rc);
    detail::add_train_options(sub, rc);
  }
  trn->get_option("--features")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  evl->get_option("--features")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cv->get_option("--features")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  evl->add_option("--model-file", rc.model_file, "model.json written by train");
  evl->add_option("--split", rc.split, "test | all");
  cv->add_option("--folds", rc.train.folds, "number of folds");
  gc->add_flag("--corrupt-gradient", rc.corrupt_gradient, "perturb analytic gradients (negative control)");

  try {
    // Splice --config contents in front of the explicit flags so the latter win.
    if (args.size() >= 2) {
      for (std::size_t i = 2; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
        if (path.empty()) continue;
        CLI::App* sub = app.get_subcommand_no_throw(args[1]);
        if (sub == nullptr) break;
        auto extra = detail::config_args(read_json_file(path), sub);
        args.insert(args.begin() + 2, extra.begin(), extra.end());
        break;
      }
    }
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kValidation;
    }
    CLI::App* sub = app.get_subcommands().front();
    rc.command = sub->get_name();
    detail::resolve(rc, sub);
    if (sub == gen) return detail::cmd_generate(rc, out);
    if (sub == trn) return detail::cmd_train(rc, out);
    if (sub == evl) return detail::cmd_eval(rc, out);
    if (sub == cv) return detail::cmd_crossval(rc, out);
    return detail::cmd_gradcheck(rc, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  }
}

}  // namespace fusionbench::cli
