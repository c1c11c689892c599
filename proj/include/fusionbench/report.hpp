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

// JSON and plain-text rendering of configurations, metric reports and
// trained models. Keys mirror the CLI long-flag names.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fusionbench/data.hpp"
#include "fusionbench/error.hpp"
#include "fusionbench/metrics.hpp"
#include "fusionbench/models.hpp"
#include "fusionbench/train.hpp"

namespace fusionbench {

using json = nlohmann::json;

inline std::string join_widths(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(w[i]);
  }
  return s;
}

inline std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  if (s.empty() || s == "none") return out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(part, &used);
      if (used != part.size() || v <= 0) throw std::invalid_argument(part);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ValidationError("invalid layer width list '" + s + "'");
    }
  }
  return out;
}

inline void write_model_config(json& j, const ModelConfig& m) {
  j["model"] = model_kind_name(m.kind);
  j["modality"] = m.modality + 1;
  j["l1"] = m.l1;
  j["l2"] = m.l2;
  j["embed-hidden"] = join_widths(m.embed_hidden);
  j["head-hidden"] = join_widths(m.head_hidden);
  j["lrc-out"] = m.lrc_out;
  j["cae-kernels"] = m.cae_kernels;
  j["cae-kernel"] = m.cae_kernel;
  j["cae-pool"] = m.cae_pool;
  j["cae-lambda"] = m.cae_lambda;
  j["recon-weight"] = m.recon_weight;
  j["pretrain-epochs"] = m.pretrain_epochs;
}

inline ModelConfig read_model_config(const json& j) {
  ModelConfig m;
  m.kind = parse_model_kind(j.at("model").get<std::string>());
  m.modality = j.at("modality").get<std::size_t>() - 1;
  m.l1 = j.at("l1").get<std::size_t>();
  m.l2 = j.at("l2").get<std::size_t>();
  m.embed_hidden = parse_widths(j.at("embed-hidden").get<std::string>());
  m.head_hidden = parse_widths(j.at("head-hidden").get<std::string>());
  m.lrc_out = j.at("lrc-out").get<std::size_t>();
  m.cae_kernels = j.at("cae-kernels").get<std::size_t>();
  m.cae_kernel = j.at("cae-kernel").get<std::size_t>();
  m.cae_pool = j.at("cae-pool").get<std::size_t>();
  m.cae_lambda = j.at("cae-lambda").get<double>();
  m.recon_weight = j.at("recon-weight").get<double>();
  m.pretrain_epochs = j.at("pretrain-epochs").get<std::size_t>();
  return m;
}

inline void write_train_config(json& j, const TrainConfig& t) {
  j["epochs"] = t.epochs;
  j["batch-size"] = t.batch_size;
  j["lr"] = t.lr;
  j["dropout"] = t.dropout;
  j["clip-norm"] = t.clip_norm;
  j["gamma"] = t.gamma;
  j["seed"] = t.seed;
  j["folds"] = t.folds;
  j["optimizer"] = optimizer_name(t.optimizer);
  j["lr-schedule"] = t.lr_schedule;
}

inline void write_synth_config(json& j, const SynthConfig& s) {
  j["mode"] = synth_mode_name(s.mode);
  j["dim"] = s.dim;
  j["noise"] = s.noise;
  j["n"] = s.samples;
  j["balance"] = s.balance;
  j["seed"] = s.seed;
}

inline void write_metrics(json& j, const MetricsReport& r) {
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["tn"] = r.tn;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["mcc"] = r.mcc;
  j["accuracy"] = r.accuracy;
}

inline std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %9s %9s %9s %9s %9s %6s %6s %6s %6s\n", "", "precision",
                "recall", "f1", "mcc", "accuracy", "tp", "fp", "fn", "tn");
  out += buf;
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof(buf), "%-12s %9.4f %9.4f %9.4f %9.4f %9.4f %6zu %6zu %6zu %6zu\n",
                  name.c_str(), r.precision, r.recall, r.f1, r.mcc, r.accuracy, r.tp, r.fp, r.fn,
                  r.tn);
    out += buf;
  }
  return out;
}

/// Flat key list, one "key = value" per line, for the text report.
inline std::string config_lines(const json& flat) {
  std::string out;
  for (const auto& [k, v] : flat.items()) out += "  " + k + " = " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  return out;
}

inline void write_text_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

inline json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr const char* kModelFormat = "fusionbench-model/1";

inline json model_to_json(const FusionModel& model, const Dataset& ds, std::uint64_t seed) {
  json j;
  j["format"] = kModelFormat;
  json cfg;
  write_model_config(cfg, model.config());
  j["config"] = cfg;
  j["seed"] = seed;
  j["input-dims"] = model.input_dims();
  j["modality-names"] = ds.modality_names;
  json params = json::object();
  for (const auto& [name, e] : model.params()) {
    params[name] = {{"shape", e.value.shape()}, {"data", e.value.values()}};
  }
  j["params"] = params;
  return j;
}

struct LoadedModel {
  FusionModel model;
  std::vector<std::string> modality_names;
  std::uint64_t seed = 0;
};

inline LoadedModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw ValidationError("unsupported model format '" + j.at("format").get<std::string>() + "'");
    }
    ModelConfig cfg = read_model_config(j.at("config"));
    auto dims = j.at("input-dims").get<std::vector<std::size_t>>();
    LoadedModel out{FusionModel::create(cfg, dims, j.at("seed").get<std::uint64_t>()),
                    j.at("modality-names").get<std::vector<std::string>>(),
                    j.at("seed").get<std::uint64_t>()};
    const json& params = j.at("params");
    if (params.size() != out.model.params().size()) {
      throw ValidationError("model file has " + std::to_string(params.size()) +
                            " parameters, architecture needs " +
                            std::to_string(out.model.params().size()));
    }
    for (const auto& [name, p] : params.items()) {
      out.model.params().set(name, Tensor(p.at("shape").get<Shape>(),
                                          p.at("data").get<std::vector<double>>()));
    }
    return out;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace fusionbench
