/*
 * Copyright 2026 The MFRC Authors.
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

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfrc/centrality.hpp"
#include "mfrc/dataset.hpp"
#include "mfrc/error.hpp"
#include "mfrc/evaluation.hpp"
#include "mfrc/factorization.hpp"
#include "mfrc/text.hpp"

namespace mfrc {

/// Default data directory for relative dataset paths.
inline constexpr const char* kDataDirEnv = "MFRC_DATA_DIR";

/// Per-model overrides of TrainConfig; unset fields keep the model default.
struct HyperOverrides {
  std::optional<int> epochs;
  std::optional<double> lambda;
  std::optional<double> eta;
  std::optional<double> init_sigma;
  std::optional<double> delta;
};

struct ExperimentSpec {
  std::string dataset_path;
  DatasetFormat format = DatasetFormat::ml_100k;
  std::vector<ModelKind> models;
  std::vector<int> k_values;
  std::vector<double> alpha_values;
  std::vector<NormalizationKind> norms;
  int repeats = 5;
  std::uint64_t base_seed = 1;
  std::map<ModelKind, HyperOverrides> hyper;

  void validate() const {
    if (models.empty()) throw ConfigError("experiment lists no models");
    if (k_values.empty()) throw ConfigError("experiment lists no k_values");
    if (alpha_values.empty()) throw ConfigError("experiment lists no alpha_values");
    if (norms.empty()) throw ConfigError("experiment lists no norms");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    for (int k : k_values)
      if (k < 1) throw ConfigError("k_values must be >= 1");
    for (double a : alpha_values)
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha_values must lie in (0, 1)");
  }
};

/// Defaults: SGD models run 100 epochs, lambda 0.05, eta 0.005; ALS-WR runs
/// 20 sweeps with lambda 0.05.
inline TrainConfig default_config(ModelKind kind) {
  TrainConfig cfg;
  if (kind == ModelKind::alswr) cfg.epochs = 20;
  return cfg;
}

inline TrainConfig cell_config(const ExperimentSpec& spec, ModelKind kind, int k,
                               NormalizationKind norm, std::uint64_t seed) {
  TrainConfig cfg = default_config(kind);
  cfg.k = k;
  cfg.norm = norm;
  cfg.seed = seed;
  if (auto it = spec.hyper.find(kind); it != spec.hyper.end()) {
    const auto& h = it->second;
    if (h.epochs) cfg.epochs = *h.epochs;
    if (h.lambda) cfg.lambda = *h.lambda;
    if (h.eta) cfg.eta = *h.eta;
    if (h.init_sigma) cfg.init_sigma = *h.init_sigma;
    if (h.delta) cfg.delta = *h.delta;
  }
  return cfg;
}

/// Resolves a relative dataset path against $MFRC_DATA_DIR when set.
inline std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

/// Parses the JSON experiment document. Keys mirror ExperimentSpec:
///
///   {"dataset": {"path": "ml-100k/u.data", "format": "ml-100k"},
///    "models": ["mfrc", "biased_mf"], "k_values": [50],
///    "alpha_values": [0.8], "norms": ["tanh"], "repeats": 5, "base_seed": 1,
///    "hyper": {"alswr": {"epochs": 20, "lambda": 0.05}}}
inline ExperimentSpec parse_experiment(const nlohmann::json& j) {
  static const std::set<std::string> known = {"dataset", "models",  "k_values", "alpha_values",
                                              "norms",   "repeats", "base_seed", "hyper"};
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown experiment field '" + key + "'");
  try {
    ExperimentSpec spec;
    spec.dataset_path = j.at("dataset").at("path").get<std::string>();
    spec.format = parse_dataset_format(j.at("dataset").value("format", std::string("ml-100k")));
    for (const auto& m : j.at("models")) spec.models.push_back(parse_model_kind(m.get<std::string>()));
    spec.k_values = j.at("k_values").get<std::vector<int>>();
    spec.alpha_values = j.at("alpha_values").get<std::vector<double>>();
    if (j.contains("norms")) {
      for (const auto& n : j.at("norms"))
        spec.norms.push_back(parse_normalization(n.get<std::string>()));
    } else {
      spec.norms = {NormalizationKind::tanh};
    }
    spec.repeats = j.value("repeats", 5);
    spec.base_seed = j.value("base_seed", std::uint64_t{1});
    if (j.contains("hyper")) {
      static const std::set<std::string> hyper_keys = {"epochs", "lambda", "eta", "init_sigma",
                                                        "delta"};
      for (const auto& [name, h] : j.at("hyper").items()) {
        HyperOverrides o;
        for (const auto& [key, value] : h.items())
          if (!hyper_keys.count(key))
            throw ConfigError("unknown hyperparameter '" + key + "' for model " + name);
        if (h.contains("epochs")) o.epochs = h.at("epochs").get<int>();
        if (h.contains("lambda")) o.lambda = h.at("lambda").get<double>();
        if (h.contains("eta")) o.eta = h.at("eta").get<double>();
        if (h.contains("init_sigma")) o.init_sigma = h.at("init_sigma").get<double>();
        if (h.contains("delta")) o.delta = h.at("delta").get<double>();
        spec.hyper[parse_model_kind(name)] = o;
      }
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
}

inline ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse experiment config '" + path + "': " + e.what());
  }
  return parse_experiment(j);
}

struct ResultRow {
  ReportKey key;
  int repeat = 0;
  std::optional<EvalReport> report;  // absent when the cell failed
  std::string status = "ok";
  double wall_time = 0.0;
};

struct AggregateRow {
  std::string model;
  int k = 0;
  double alpha = 0.0;
  std::string norm;
  int runs = 0;
  int failures = 0;
  double mean_rmse = 0.0;
  std::optional<double> mean_fcp;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;
};

namespace detail {

// Column order of the report tables: baselines first, mfrc last.
inline int model_rank(const std::string& m) {
  int rank = 0;
  for (ModelKind k : {ModelKind::plain_mf, ModelKind::biased_mf, ModelKind::alswr, ModelKind::mfrc}) {
    if (to_string(k) == m) return rank;
    ++rank;
  }
  return rank;
}

inline int norm_rank(const std::string& n) {
  if (n == "none") return -1;
  return static_cast<int>(parse_normalization(n));
}

inline auto cell_order(const ReportKey& key) {
  return std::make_tuple(model_rank(key.model), key.model, key.k, key.alpha, norm_rank(key.norm));
}

inline std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace detail

/// Means over successful member rows, one aggregate per (model, k, alpha, norm).
inline std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<int, std::string, int, double, int, std::string>;
  struct Acc {
    AggregateRow row;
    double rmse_sum = 0.0;
    double fcp_sum = 0.0;
    int fcp_n = 0;
  };
  std::map<Key, Acc> cells;
  for (const auto& r : rows) {
    const auto& k = r.key;
    Key key{detail::model_rank(k.model), k.model, k.k, k.alpha, detail::norm_rank(k.norm), k.norm};
    auto& acc = cells[key];
    acc.row.model = k.model;
    acc.row.k = k.k;
    acc.row.alpha = k.alpha;
    acc.row.norm = k.norm;
    if (!r.report) {
      ++acc.row.failures;
      continue;
    }
    ++acc.row.runs;
    acc.rmse_sum += r.report->rmse;
    if (r.report->fcp) {
      acc.fcp_sum += *r.report->fcp;
      ++acc.fcp_n;
    }
  }
  std::vector<AggregateRow> out;
  for (auto& [key, acc] : cells) {
    if (acc.row.runs > 0) acc.row.mean_rmse = acc.rmse_sum / acc.row.runs;
    if (acc.fcp_n > 0) acc.row.mean_fcp = acc.fcp_sum / acc.fcp_n;
    out.push_back(acc.row);
  }
  return out;
}

using ProgressFn = std::function<void(const ResultRow&)>;

/// Runs every (repeat, alpha, model, k, norm) cell on a loaded dataset.
/// Repeat r splits with seed base_seed + r and trains with the same seed.
/// Norms only vary for mfrc; the other models report norm "none".
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const RatingDataset& data,
                                       const ProgressFn& progress = {}) {
  spec.validate();
  ExperimentResult result;
  for (int r = 0; r < spec.repeats; ++r) {
    const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(r);
    for (double alpha : spec.alpha_values) {
      const SplitPair parts = split(data, alpha, seed);
      for (ModelKind kind : spec.models) {
        std::vector<std::optional<NormalizationKind>> norms;
        if (kind == ModelKind::mfrc)
          norms.assign(spec.norms.begin(), spec.norms.end());
        else
          norms.push_back(std::nullopt);
        for (int k : spec.k_values) {
          for (const auto& norm : norms) {
            ResultRow row;
            row.key = {to_string(kind), k, alpha, norm ? to_string(*norm) : "none", seed};
            row.repeat = r;
            const auto start = std::chrono::steady_clock::now();
            try {
              const TrainConfig cfg =
                  cell_config(spec, kind, k, norm.value_or(NormalizationKind::tanh), seed);
              const auto trained = train_model(kind, parts.train, cfg);
              row.report = evaluate(trained.first, parts.test);
            } catch (const Error& e) {
              row.status = "failed: " + detail::sanitize(e.what());
            }
            row.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (progress) progress(row);
            result.rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::make_tuple(detail::cell_order(a.key), a.repeat) <
           std::make_tuple(detail::cell_order(b.key), b.repeat);
  });
  result.aggregates = aggregate(result.rows);
  return result;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
  const std::string path = resolve_data_path(spec.dataset_path);
  if (!std::filesystem::exists(path)) throw IoError("dataset file '" + path + "' does not exist");
  return run_experiment(spec, ingest(path, spec.format), progress);
}

inline constexpr const char* kResultsHeaderTail = ",repeat,status,wall_time";

/// Result rows; wall_time is left empty when `with_timing` is false so that
/// repeated runs are byte-identical.
inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows,
                          bool with_timing = true) {
  out << kReportHeader << kResultsHeaderTail << '\n';
  for (const auto& r : rows) {
    if (r.report) {
      out << report_row(r.key, *r.report);
    } else {
      out << r.key.model << ',' << r.key.k << ',' << text::format_double(r.key.alpha) << ','
          << r.key.norm << ',' << r.key.seed << ",,,,,,,";
    }
    out << ',' << r.repeat << ',' << r.status << ',';
    if (with_timing) out << text::format_double(r.wall_time);
    out << '\n';
  }
}

inline void write_aggregates(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "model,k,alpha,norm,runs,failures,mean_rmse,mean_fcp\n";
  for (const auto& a : rows) {
    out << a.model << ',' << a.k << ',' << text::format_double(a.alpha) << ',' << a.norm << ','
        << a.runs << ',' << a.failures << ','
        << (a.runs ? text::format_double(a.mean_rmse) : std::string()) << ','
        << (a.mean_fcp ? text::format_double(*a.mean_fcp) : std::string()) << '\n';
  }
}

/// Parses a results CSV produced by write_results back into rows.
inline std::vector<ResultRow> read_results(std::istream& in, const std::string& source = "<results>") {
  const std::string expected = std::string(kReportHeader) + kResultsHeaderTail;
  std::string line;
  if (!std::getline(in, line) || text::strip_cr(line) != expected)
    throw ParseError(source, 1, "inconsistent schema: expected header '" + expected + "'");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::strip_cr(line);
    if (view.empty()) continue;
    const auto f = text::split(view, ",");
    if (f.size() != 15) throw ParseError(source, line_no, "inconsistent schema: expected 15 fields");
    ResultRow row;
    const auto k = text::parse_int<int>(f[1]);
    const auto alpha = text::parse_double(f[2]);
    const auto seed = text::parse_int<std::uint64_t>(f[4]);
    const auto repeat = text::parse_int<int>(f[12]);
    if (!k || !alpha || !seed || !repeat) throw ParseError(source, line_no, "malformed cell key");
    row.key = {std::string(f[0]), *k, *alpha, std::string(f[3]), *seed};
    row.repeat = *repeat;
    row.status = std::string(f[13]);
    if (!f[14].empty()) row.wall_time = text::parse_double(f[14]).value_or(0.0);
    if (row.status == "ok") {
      EvalReport r;
      const auto rmse_v = text::parse_double(f[5]);
      const auto c = text::parse_int<std::uint64_t>(f[7]);
      const auto d = text::parse_int<std::uint64_t>(f[8]);
      const auto s = text::parse_int<std::uint64_t>(f[9]);
      const auto fb = text::parse_int<std::uint64_t>(f[10]);
      const auto n = text::parse_int<std::uint64_t>(f[11]);
      if (!rmse_v || !c || !d || !s || !fb || !n)
        throw ParseError(source, line_no, "malformed metrics");
      r.rmse = *rmse_v;
      if (!f[6].empty()) {
        const auto fcp_v = text::parse_double(f[6]);
        if (!fcp_v) throw ParseError(source, line_no, "malformed fcp");
        r.fcp = *fcp_v;
      }
      r.concordant = *c;
      r.discordant = *d;
      r.skipped_pairs = *s;
      r.fallback_predictions = *fb;
      r.test_size = *n;
      row.report = r;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Pivot tables over result rows: mean RMSE and mean FCP with rows (k, alpha)
/// and one column per model (mfrc columns carry their norm), then mfrc RMSE
/// by norm. Each table starts with a `# name` line.
inline void write_report(std::ostream& out, const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw DataError("report needs at least one result row");
  const auto aggs = aggregate(rows);
  auto column_of = [](const AggregateRow& a) {
    return a.norm == "none" ? a.model : a.model + ":" + a.norm;
  };
  std::vector<std::string> columns;
  std::vector<std::pair<int, double>> row_keys;
  for (const auto& a : aggs) {
    const auto c = column_of(a);
    if (std::find(columns.begin(), columns.end(), c) == columns.end()) columns.push_back(c);
    row_keys.emplace_back(a.k, a.alpha);
  }
  std::sort(row_keys.begin(), row_keys.end());
  row_keys.erase(std::unique(row_keys.begin(), row_keys.end()), row_keys.end());
  std::map<std::tuple<int, double, std::string>, const AggregateRow*> cell;
  for (const auto& a : aggs) cell[{a.k, a.alpha, column_of(a)}] = &a;

  auto table = [&](const char* name, auto value) {
    out << "# " << name << "\nk,alpha";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (const auto& [k, alpha] : row_keys) {
      out << k << ',' << text::format_double(alpha);
      for (const auto& c : columns) {
        out << ',';
        if (auto it = cell.find({k, alpha, c}); it != cell.end()) {
          if (auto v = value(*it->second)) out << text::format_double(*v);
        }
      }
      out << '\n';
    }
  };
  table("rmse", [](const AggregateRow& a) -> std::optional<double> {
    if (a.runs == 0) return std::nullopt;
    return a.mean_rmse;
  });
  out << '\n';
  table("fcp", [](const AggregateRow& a) { return a.mean_fcp; });

  std::vector<std::string> norms;
  for (const auto& a : aggs)
    if (a.model == "mfrc" && std::find(norms.begin(), norms.end(), a.norm) == norms.end())
      norms.push_back(a.norm);
  if (norms.empty()) return;
  out << "\n# mfrc_rmse_by_norm\nk,alpha";
  for (const auto& n : norms) out << ',' << n;
  out << '\n';
  for (const auto& [k, alpha] : row_keys) {
    out << k << ',' << text::format_double(alpha);
    for (const auto& n : norms) {
      out << ',';
      if (auto it = cell.find({k, alpha, "mfrc:" + n}); it != cell.end() && it->second->runs > 0)
        out << text::format_double(it->second->mean_rmse);
    }
    out << '\n';
  }
}

}  // namespace mfrc
