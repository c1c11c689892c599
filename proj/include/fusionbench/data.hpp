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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "fusionbench/error.hpp"
#include "fusionbench/init.hpp"
#include "fusionbench/tensor.hpp"

namespace fusionbench {

struct MultimodalSample {
  std::string id;
  std::vector<Tensor> modalities;  // aligned with Dataset::modality_names
  int label = 0;
};

/// Samples sharing one modality layout. Immutable once built.
struct Dataset {
  std::vector<std::string> modality_names;
  std::vector<MultimodalSample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t modality_count() const { return modality_names.size(); }
  std::size_t dim(std::size_t m) const { return samples.at(0).modalities.at(m).size(); }

  std::size_t modality_index(const std::string& name) const {
    auto it = std::find(modality_names.begin(), modality_names.end(), name);
    if (it == modality_names.end()) throw ValidationError("unknown modality '" + name + "'");
    return static_cast<std::size_t>(it - modality_names.begin());
  }

  /// Throws unless every sample carries the same modality count and widths.
  void validate() const {
    if (samples.empty()) throw ValidationError("dataset is empty");
    for (const auto& s : samples) {
      if (s.modalities.size() != modality_names.size()) {
        throw ValidationError("sample '" + s.id + "' has " + std::to_string(s.modalities.size()) +
                              " modalities, expected " + std::to_string(modality_names.size()));
      }
      for (std::size_t m = 0; m < s.modalities.size(); ++m) {
        if (s.modalities[m].shape() != samples.front().modalities[m].shape()) {
          throw ValidationError("sample '" + s.id + "' modality '" + modality_names[m] +
                                "' has shape " + shape_str(s.modalities[m].shape()));
        }
      }
      if (s.label != 0 && s.label != 1) {
        throw ValidationError("sample '" + s.id + "' has non-binary label");
      }
    }
  }

  std::vector<int> labels() const {
    std::vector<int> y;
    y.reserve(samples.size());
    for (const auto& s : samples) y.push_back(s.label);
    return y;
  }

  /// Same samples, keeping only the listed modalities.
  Dataset select_modalities(const std::vector<std::size_t>& keep) const {
    Dataset out;
    for (std::size_t m : keep) out.modality_names.push_back(modality_names.at(m));
    for (const auto& s : samples) {
      MultimodalSample t{s.id, {}, s.label};
      for (std::size_t m : keep) t.modalities.push_back(s.modalities.at(m));
      out.samples.push_back(std::move(t));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Synthetic generation

enum class SynthMode { complementary, redundant };

inline const char* synth_mode_name(SynthMode m) {
  return m == SynthMode::complementary ? "complementary" : "redundant";
}

inline SynthMode parse_synth_mode(const std::string& s) {
  if (s == "complementary") return SynthMode::complementary;
  if (s == "redundant") return SynthMode::redundant;
  throw ValidationError("unknown synthetic mode '" + s + "'");
}

struct SynthConfig {
  SynthMode mode = SynthMode::complementary;
  std::size_t dim = 8;
  double noise = 0.1;
  std::size_t samples = 2000;
  std::uint64_t seed = 42;
  double balance = 0.5;

  void validate() const {
    if (dim < 2) throw ValidationError("synthetic: dim must be at least 2");
    if (!(noise >= 0.0)) throw ValidationError("synthetic: noise must be non-negative");
    if (samples == 0) throw ValidationError("synthetic: sample count must be positive");
    if (!(balance > 0.0 && balance < 1.0)) throw ValidationError("synthetic: balance must be in (0, 1)");
  }
};

/// Bits of the generating process, kept for tests.
struct SynthLatent {
  int u = 0;
  int v = 0;
};

namespace detail {

inline Tensor unit_direction(std::size_t dim, Rng& rng) {
  Tensor d = random_normal(Shape{dim}, rng);
  const double n = std::sqrt(squared_norm(d));
  d *= 1.0 / n;
  return d;
}

inline Tensor encode_bit(int bit, const Tensor& direction, double noise, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor x(direction.shape());
  const double sign = bit ? 1.0 : -1.0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = sign * direction[i] + noise * gauss(rng);
  return x;
}

inline std::string sample_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "s" + std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

}  // namespace detail

/// Two-modality synthetic task. Complementary: the label is u XOR v where
/// modality "m1" sees only u and "m2" sees only v, each as ±direction plus
/// Gaussian noise. Redundant: both modalities encode the label itself.
inline Dataset generate_synthetic(const SynthConfig& cfg, std::vector<SynthLatent>* latents = nullptr) {
  cfg.validate();
  Rng rng(cfg.seed);
  const Tensor d1 = detail::unit_direction(cfg.dim, rng);
  const Tensor d2 = detail::unit_direction(cfg.dim, rng);
  std::bernoulli_distribution coin(0.5), label_dist(cfg.balance);
  Dataset ds;
  ds.modality_names = {"m1", "m2"};
  if (latents) latents->clear();
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const int u = coin(rng) ? 1 : 0;
    const int y = label_dist(rng) ? 1 : 0;
    int a, b;
    if (cfg.mode == SynthMode::complementary) {
      a = u;
      b = u ^ y;
    } else {
      a = y;
      b = y;
    }
    MultimodalSample s{detail::sample_id(i), {}, y};
    s.modalities.push_back(detail::encode_bit(a, d1, cfg.noise, rng));
    s.modalities.push_back(detail::encode_bit(b, d2, cfg.noise, rng));
    ds.samples.push_back(std::move(s));
    if (latents) latents->push_back({a, b});
  }
  return ds;
}

// ---------------------------------------------------------------------------
// TSV ingestion
//
// Embedding file: "#dim=<D>" then "id\tv0\t...\tv{D-1}" per line.
// Label file:     "id\t0" or "id\t1" per line.

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct EmbeddingFile {
  std::size_t dim = 0;
  std::vector<std::string> order;
  std::map<std::string, Tensor> rows;
};

inline EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string p = path.string();
  EmbeddingFile out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(p, 1, "missing '#dim=' header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("#dim=", 0) != 0) throw ParseError(p, lineno, "expected '#dim=<D>' header");
  {
    std::string_view num(line);
    num.remove_prefix(5);
    auto res = std::from_chars(num.data(), num.data() + num.size(), out.dim);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size() || out.dim == 0) {
      throw ParseError(p, lineno, "invalid dimension in header");
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != out.dim + 1) {
      throw ParseError(p, lineno, "expected " + std::to_string(out.dim) + " values, got " +
                                      std::to_string(fields.size() - 1));
    }
    std::string id(fields[0]);
    if (id.empty()) throw ParseError(p, lineno, "empty id");
    std::vector<double> values(out.dim);
    for (std::size_t j = 0; j < out.dim; ++j) {
      std::string_view f = fields[j + 1];
      auto res = std::from_chars(f.data(), f.data() + f.size(), values[j]);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ParseError(p, lineno, "invalid number '" + std::string(f) + "'");
      }
      if (!std::isfinite(values[j])) throw ParseError(p, lineno, "non-finite value");
    }
    if (out.rows.count(id)) throw ParseError(p, lineno, "duplicate id '" + id + "'");
    out.order.push_back(id);
    out.rows.emplace(id, Tensor::vector(std::move(values)));
  }
  return out;
}

}  // namespace detail

struct ModalityFile {
  std::string name;
  std::filesystem::path path;
};

/// Joins modality files and a label file on id. Sample order follows the
/// label file. Every id must appear in every file.
inline Dataset load_embeddings(const std::vector<ModalityFile>& features,
                               const std::filesystem::path& labels_path) {
  if (features.empty()) throw ValidationError("load_embeddings: no modality files");
  std::vector<detail::EmbeddingFile> files;
  Dataset ds;
  for (const auto& f : features) {
    files.push_back(detail::read_embedding_file(f.path));
    ds.modality_names.push_back(f.name);
  }

  auto in = detail::open_input(labels_path);
  const std::string lp = labels_path.string();
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 2) throw ParseError(lp, lineno, "expected 'id<TAB>label'");
    std::string id(fields[0]);
    if (fields[1] != "0" && fields[1] != "1") {
      throw ParseError(lp, lineno, "label must be 0 or 1, got '" + std::string(fields[1]) + "'");
    }
    if (!seen.insert(id).second) throw ParseError(lp, lineno, "duplicate id '" + id + "'");
    MultimodalSample s{id, {}, fields[1] == "1" ? 1 : 0};
    for (std::size_t m = 0; m < files.size(); ++m) {
      auto it = files[m].rows.find(id);
      if (it == files[m].rows.end()) {
        throw IngestionError(id, "missing from modality '" + features[m].name + "' (" +
                                     features[m].path.string() + ")");
      }
      s.modalities.push_back(it->second);
    }
    ds.samples.push_back(std::move(s));
  }
  for (std::size_t m = 0; m < files.size(); ++m) {
    for (const auto& id : files[m].order) {
      if (!seen.count(id)) {
        throw IngestionError(id, "present in modality '" + features[m].name +
                                     "' but missing from labels (" + lp + ")");
      }
    }
  }
  if (ds.samples.empty()) throw ValidationError("load_embeddings: no samples in " + lp);
  return ds;
}

/// Writes "<name>.tsv" per modality and "labels.tsv" into dir, using the
/// shortest decimal form that round-trips each double exactly.
inline std::vector<ModalityFile> write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                                               std::filesystem::path* labels_out = nullptr) {
  ds.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  auto open_out = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    return out;
  };
  std::vector<ModalityFile> files;
  for (std::size_t m = 0; m < ds.modality_count(); ++m) {
    ModalityFile f{ds.modality_names[m], dir / (ds.modality_names[m] + ".tsv")};
    auto out = open_out(f.path);
    out << "#dim=" << ds.dim(m) << '\n';
    for (const auto& s : ds.samples) {
      out << s.id;
      for (double v : s.modalities[m].data()) out << '\t' << detail::format_double(v);
      out << '\n';
    }
    if (!out) throw IoError("write failed for '" + f.path.string() + "'");
    files.push_back(std::move(f));
  }
  const auto lp = dir / "labels.tsv";
  auto out = open_out(lp);
  for (const auto& s : ds.samples) out << s.id << '\t' << s.label << '\n';
  if (!out) throw IoError("write failed for '" + lp.string() + "'");
  if (labels_out) *labels_out = lp;
  return files;
}

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

/// 72/8/20 train/val/test over a seeded shuffle: test = ⌊0.2n⌋,
/// val = max(1, ⌊0.08n⌋), the remainder goes to train. Not stratified.
inline Split split_indices(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw ValidationError("split: need at least 10 samples, got " + std::to_string(n));
  auto perm = seeded_permutation(n, seed);
  const std::size_t test = n / 5;
  const std::size_t val = std::max<std::size_t>(1, (n * 2) / 25);
  Split s;
  s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test));
  s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(test),
               perm.begin() + static_cast<std::ptrdiff_t>(test + val));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(test + val), perm.end());
  return s;
}

inline Split split_dataset(const Dataset& ds, std::uint64_t seed) { return split_indices(ds.size(), seed); }

}  // namespace fusionbench
