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

// Command-line front end: ingest, split, weights, train, evaluate,
// experiment and report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mfrc/mfrc.hpp"

namespace {

using namespace mfrc;

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path))
    throw IoError(std::string(what) + " '" + path + "' does not exist");
}

/// Writes to `path`, or stdout when path is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  fn(out);
  if (!out) throw IoError("write to '" + path + "' failed");
}

RatingDataset load_source(const std::string& input, const std::string& format,
                          const std::string& csv) {
  if (!csv.empty()) {
    require_file(csv, "dataset");
    return read_csv(csv);
  }
  const std::string path = resolve_data_path(input);
  require_file(path, "rating file");
  return ingest(path, parse_dataset_format(format));
}

struct Options {
  // shared
  std::string input, format = "ml-100k", data_csv, out;
  std::uint64_t seed = 1;
  // split
  double ratio = 0.8;
  std::string train_out = "train.csv", test_out = "test.csv";
  // weights / train
  std::string train_csv, norm = "tanh";
  double delta = kDefaultDelta;
  std::string model_kind = "mfrc", trace_out;
  int k = 50;
  std::optional<int> epochs_opt;
  double lambda = 0.05, eta = 0.005, init_sigma = TrainConfig{}.init_sigma;
  double scale_min = 1.0, scale_max = 5.0;
  // evaluate
  std::string model_path, test_csv, label_norm;
  double alpha = 0.0;
  // experiment / report
  std::string config, aggregate_out, results;
  bool no_timing = false, quiet = false;
};

int run_ingest(const Options& o) {
  const std::string path = resolve_data_path(o.input);
  require_file(path, "rating file");
  const RatingDataset ds = ingest(path, parse_dataset_format(o.format));
  std::cout << "users,items,ratings,sparsity,global_mean\n"
            << ds.num_users() << ',' << ds.num_items() << ',' << ds.size() << ','
            << text::format_double(sparsity(ds)) << ',' << text::format_double(global_mean(ds))
            << '\n';
  if (!o.out.empty()) write_csv(o.out, ds);
  return 0;
}

int run_split(const Options& o) {
  const RatingDataset ds = load_source(o.input, o.format, o.data_csv);
  const SplitPair parts = split(ds, o.ratio, o.seed);
  write_csv(o.train_out, parts.train);
  write_csv(o.test_out, parts.test);
  std::cout << "train,test\n" << parts.train.size() << ',' << parts.test.size() << '\n';
  return 0;
}

int run_weights(const Options& o) {
  require_file(o.train_csv, "training set");
  const RatingDataset train = read_csv(o.train_csv, {o.scale_min, o.scale_max});
  const auto w = build_weights(train, parse_normalization(o.norm), o.delta);
  with_output(o.out, [&](std::ostream& out) { write_weights_csv(out, train, w); });
  return 0;
}

int run_train(const Options& o) {
  require_file(o.train_csv, "training set");
  const ModelKind kind = parse_model_kind(o.model_kind);
  const RatingDataset train = read_csv(o.train_csv, {o.scale_min, o.scale_max});
  TrainConfig cfg = default_config(kind);
  cfg.k = o.k;
  if (o.epochs_opt) cfg.epochs = *o.epochs_opt;
  cfg.lambda = o.lambda;
  cfg.eta = o.eta;
  cfg.seed = o.seed;
  cfg.norm = parse_normalization(o.norm);
  cfg.delta = o.delta;
  cfg.init_sigma = o.init_sigma;
  const auto [model, trace] = train_model(kind, train, cfg);
  save_model(model, o.out);
  if (!o.trace_out.empty()) {
    with_output(o.trace_out, [&](std::ostream& out) {
      out << "epoch,objective,train_rmse\n";
      for (std::size_t e = 0; e < trace.objective.size(); ++e)
        out << e + 1 << ',' << text::format_double(trace.objective[e]) << ','
            << text::format_double(trace.train_rmse[e]) << '\n';
    });
  }
  std::cerr << "trained " << to_string(kind) << " k=" << cfg.k << " epochs=" << cfg.epochs
            << " final objective=" << text::format_double(trace.objective.back()) << '\n';
  return 0;
}

int run_evaluate(const Options& o) {
  require_file(o.model_path, "model");
  require_file(o.test_csv, "test set");
  const FactorModel model = load_model(o.model_path);
  const RatingDataset test = read_csv(o.test_csv, model.scale);
  const EvalReport report = evaluate(model, test);
  const std::string norm =
      !o.label_norm.empty() ? o.label_norm : (model.kind == ModelKind::mfrc ? "tanh" : "none");
  std::cout << kReportHeader << '\n'
            << report_row({to_string(model.kind), model.k, o.alpha, norm, model.seed}, report)
            << '\n';
  return 0;
}

int run_experiment_cmd(const Options& o) {
  require_file(o.config, "experiment config");
  const ExperimentSpec spec = load_experiment(o.config);
  const std::string data = resolve_data_path(spec.dataset_path);
  require_file(data, "dataset");
  ProgressFn progress;
  if (!o.quiet) {
    progress = [](const ResultRow& r) {
      std::cerr << r.key.model << " k=" << r.key.k << " alpha=" << r.key.alpha
                << " norm=" << r.key.norm << " repeat=" << r.repeat << ": "
                << (r.report ? "rmse=" + text::format_double(r.report->rmse) : r.status) << '\n';
    };
  }
  const ExperimentResult result = run_experiment(spec, progress);
  with_output(o.out, [&](std::ostream& out) { write_results(out, result.rows, !o.no_timing); });
  if (!o.aggregate_out.empty())
    with_output(o.aggregate_out,
                [&](std::ostream& out) { write_aggregates(out, result.aggregates); });
  return 0;
}

int run_report(const Options& o) {
  require_file(o.results, "results file");
  std::ifstream in(o.results);
  const auto rows = read_results(in, o.results);
  with_output(o.out, [&](std::ostream& out) { write_report(out, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rating-centrality weighted matrix factorization toolkit"};
  app.require_subcommand(1);
  Options o;

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a MovieLens file and print statistics");
  ingest_cmd->add_option("--input", o.input, "Rating file (relative paths use $MFRC_DATA_DIR)")
      ->required();
  ingest_cmd->add_option("--format", o.format, "ml-100k or ml-1m");
  ingest_cmd->add_option("--out", o.out, "Write the interchange CSV here");

  auto* split_cmd = app.add_subcommand("split", "Seeded random train/test split");
  split_cmd->add_option("--input", o.input, "MovieLens rating file");
  split_cmd->add_option("--format", o.format, "ml-100k or ml-1m");
  split_cmd->add_option("--data", o.data_csv, "Interchange CSV instead of --input");
  split_cmd->add_option("--ratio", o.ratio, "Training fraction in (0,1)");
  split_cmd->add_option("--seed", o.seed);
  split_cmd->add_option("--train-out", o.train_out);
  split_cmd->add_option("--test-out", o.test_out);

  auto* weights_cmd = app.add_subcommand("weights", "Dump per-rating reliability weights");
  weights_cmd->add_option("--train", o.train_csv)->required();
  weights_cmd->add_option("--norm", o.norm, "tanh, sigmoid or identity");
  weights_cmd->add_option("--delta", o.delta);
  weights_cmd->add_option("--out", o.out);

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a snapshot");
  train_cmd->add_option("--model", o.model_kind, "mfrc, biased_mf, plain_mf or alswr");
  train_cmd->add_option("--k", o.k);
  train_cmd->add_option("--epochs", o.epochs_opt, "Epochs (ALS sweeps for alswr)");
  train_cmd->add_option("--lambda", o.lambda);
  train_cmd->add_option("--eta", o.eta);
  train_cmd->add_option("--norm", o.norm);
  train_cmd->add_option("--delta", o.delta);
  train_cmd->add_option("--init-sigma", o.init_sigma);
  train_cmd->add_option("--seed", o.seed);
  train_cmd->add_option("--train", o.train_csv)->required();
  train_cmd->add_option("--out", o.out)->required();
  train_cmd->add_option("--trace", o.trace_out, "Per-epoch objective CSV");
  for (auto* cmd : {weights_cmd, train_cmd}) {
    cmd->add_option("--scale-min", o.scale_min);
    cmd->add_option("--scale-max", o.scale_max);
  }

  auto* eval_cmd = app.add_subcommand("evaluate", "Score a snapshot on a test CSV");
  eval_cmd->add_option("--model", o.model_path)->required();
  eval_cmd->add_option("--test", o.test_csv)->required();
  eval_cmd->add_option("--alpha", o.alpha, "Training ratio label for the report row");
  eval_cmd->add_option("--norm", o.label_norm, "Normalization label for the report row");

  auto* exp_cmd = app.add_subcommand("experiment", "Run a sweep from a JSON config");
  exp_cmd->add_option("--config", o.config)->required();
  exp_cmd->add_option("--out", o.out, "Results CSV (default stdout)");
  exp_cmd->add_option("--aggregate", o.aggregate_out, "Mean-over-repeats CSV");
  exp_cmd->add_flag("--no-timing", o.no_timing, "Leave wall_time empty");
  exp_cmd->add_flag("--quiet", o.quiet);

  auto* report_cmd = app.add_subcommand("report", "Pivot a results CSV into tables");
  report_cmd->add_option("--results", o.results)->required();
  report_cmd->add_option("--out", o.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest_cmd) return run_ingest(o);
    if (*split_cmd) {
      if (o.input.empty() && o.data_csv.empty())
        throw ConfigError("split needs --input or --data");
      return run_split(o);
    }
    if (*weights_cmd) return run_weights(o);
    if (*train_cmd) return run_train(o);
    if (*eval_cmd) return run_evaluate(o);
    if (*exp_cmd) return run_experiment_cmd(o);
    if (*report_cmd) return run_report(o);
  } catch (const mfrc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mfrc::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const mfrc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
