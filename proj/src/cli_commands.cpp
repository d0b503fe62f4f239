// Copyright 2026 The convsurv Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "convsurv/cli_commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "convsurv/data_pipeline.hpp"
#include "convsurv/estimators.hpp"
#include "convsurv/evaluation.hpp"
#include "convsurv/model_file.hpp"
#include "convsurv/parallel.hpp"
#include "convsurv/report.hpp"

namespace convsurv {
namespace {

namespace fs = std::filesystem;

// Writes to a file, or to the command's stdout for "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(ErrorKind::Io, "cannot write " + path);
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }

  void close(const std::string& path) {
    stream_->flush();
    if (!*stream_) throw Error(ErrorKind::Io, "failed writing " + path);
  }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<PlayerLog> load_population(const std::string& path) {
  return filter_newcomers(ingest_logs(fs::path(path)));
}

struct ForestFlags {
  std::size_t trees = 900;
  double alpha = 0.05;
  std::optional<std::size_t> mtry;
  std::size_t min_node_events = 15;
  std::optional<int> max_depth;
  std::string aggregation = "pooled";
  std::size_t threads = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--trees", trees, "Trees per forest")->capture_default_str();
    cmd->add_option("--alpha", alpha, "Conditional-inference significance level")
        ->capture_default_str();
    cmd->add_option("--mtry", mtry, "Features tried per split (default ceil(sqrt(p)))");
    cmd->add_option("--min-node-events", min_node_events, "Events per daughter (event-free daughters need as many subjects)")
        ->capture_default_str();
    cmd->add_option("--max-depth", max_depth, "Depth limit");
    cmd->add_option("--aggregate", aggregation, "Conditional ensemble aggregation")
        ->check(CLI::IsMember({"pooled", "mean"}))
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Training threads (0: CONVSURV_THREADS or all)");
  }

  ForestConfig config(std::uint64_t seed) const {
    ForestConfig c;
    c.n_trees = trees;
    c.alpha = alpha;
    c.mtry = mtry;
    c.min_node_events = min_node_events;
    c.max_depth = max_depth;
    c.aggregation = parse_aggregation(aggregation);
    c.threads = threads;
    c.seed = seed;
    return c;
  }
};

std::vector<std::string> expand_list(const std::string& text,
                                     const std::vector<std::string>& all) {
  if (text == "all") return all;
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (std::find(all.begin(), all.end(), item) == all.end()) {
      throw Error(ErrorKind::Config, "unknown entry '" + item + "' in list '" + text + "'");
    }
    out.push_back(item);
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty list");
  return out;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  GeneratorConfig cfg;
  std::string out;
  std::string truth;
};

void run_generate(const GenerateArgs& a, std::ostream& err) {
  const auto data = generate_synthetic(a.cfg);
  const std::string truth = a.truth.empty() ? fs::path(a.out).replace_extension().string() +
                                                  ".truth.csv"
                                            : a.truth;
  {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + a.out);
    write_logs_csv(f, data.logs);
  }
  {
    std::ofstream f(truth, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + truth);
    write_ground_truth_csv(f, data.truth);
  }
  err << "wrote " << data.logs.size() << " players to " << a.out << " and " << truth << "\n";
}

struct TrainArgs {
  std::string input;
  std::string model = "rsf";
  std::string target = "lifetime";
  ForestFlags forest;
  std::uint64_t seed = 0;
  double train_frac = 0.30;
  std::optional<int> churn_window;
  std::optional<int> data_end;
  std::string out;
  std::string summary;
};

void run_train(const TrainArgs& a, std::ostream& err) {
  const ModelKind kind = parse_model_kind(a.model);
  if (kind == ModelKind::RsfCr && !a.churn_window) {
    throw Error(ErrorKind::Config,
                "model rsf-cr needs churn labels; pass --churn-window <days>");
  }
  const auto logs = load_population(a.input);
  FeatureSpec spec;
  if (a.churn_window) spec.churn_window = *a.churn_window;
  spec.data_end = a.data_end;
  const TimeAxis axis = parse_time_axis(a.target);
  const auto data = build_dataset(logs, axis, a.churn_window.has_value(), spec);
  const auto [train, test] = stratified_split(data, {a.train_frac, true, a.seed});

  TrainedModel m;
  m.kind = kind;
  m.axis = axis;
  m.feature_names = data.feature_names();
  m.feature_hash = feature_spec_hash();
  m.churn_window = a.churn_window;
  m.seed = a.seed;

  nlohmann::ordered_json summary;
  summary["model"] = a.model;
  summary["target"] = a.target;
  summary["seed"] = a.seed;
  summary["train_fraction"] = a.train_frac;
  summary["churn_window"] = a.churn_window ? nlohmann::ordered_json(*a.churn_window)
                                           : nlohmann::ordered_json(nullptr);
  summary["n_players"] = data.size();
  summary["n_train"] = train.size();
  summary["n_train_converted"] = train.count(EventStatus::Converted);
  summary["n_held_out"] = test.size();

  const auto start = std::chrono::steady_clock::now();
  if (kind == ModelKind::Cox) {
    CoxFit fit = fit_cox(train.as_single_risk());
    summary["iterations"] = fit.convergence.iterations;
    summary["gradient_norm"] = fit.convergence.gradient_norm;
    summary["log_partial_likelihood"] = fit.convergence.log_partial_likelihood;
    nlohmann::ordered_json beta;
    for (std::size_t j = 0; j < fit.feature_names.size(); ++j) {
      beta[fit.feature_names[j]] = fit.beta[static_cast<Eigen::Index>(j)];
    }
    summary["beta"] = std::move(beta);
    m.model = std::move(fit);
  } else {
    const ForestConfig cfg = a.forest.config(a.seed);
    const ForestKind fk = kind == ModelKind::Rsf   ? ForestKind::RandomSurvival
                          : kind == ModelKind::Cif ? ForestKind::ConditionalInference
                                                   : ForestKind::CompetingRisks;
    ForestModel forest =
        fit_forest(fk, fk == ForestKind::CompetingRisks ? train : train.as_single_risk(), cfg);
    std::size_t leaves = 0;
    for (const auto& t : forest.trees()) leaves += t.leaves.size();
    summary["trees"] = forest.n_trees();
    summary["mtry"] = cfg.resolved_mtry(forest.feature_names().size());
    summary["min_node_events"] = cfg.min_node_events;
    summary["alpha"] = cfg.alpha;
    summary["mean_leaves_per_tree"] =
        static_cast<double>(leaves) / static_cast<double>(forest.n_trees());
    summary["time_grid_size"] = forest.time_grid().size();
    m.model = std::move(forest);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  save_model(m, a.out);
  const std::string summary_path = a.summary.empty() ? a.out + ".summary.json" : a.summary;
  write_text(summary_path, summary.dump(2) + "\n");
  err << "trained " << a.model << " on " << train.size() << " players in " << seconds
      << " s; model written to " << a.out << "\n";
}

struct PredictArgs {
  std::string model_file;
  std::string input;
  std::string out = "-";
  std::optional<std::string> curve;
  std::optional<int> data_end;
};

void run_predict(const PredictArgs& a, std::ostream& out) {
  const TrainedModel m = load_model(a.model_file);
  if (m.feature_hash != feature_spec_hash() || m.feature_names != feature_names()) {
    throw Error(ErrorKind::Compatibility,
                "model was trained with feature spec " + m.feature_hash +
                    " but this build computes " + feature_spec_hash());
  }
  FeatureSpec spec;
  spec.data_end = a.data_end;
  const auto data = build_dataset(load_population(a.input), m.axis, false, spec);
  const Eigen::MatrixXd x = data.design_matrix();
  Output sink(a.out, out);

  if (a.curve) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].subject_id != *a.curve) continue;
      const auto f = predict_incidence(m, x.row(static_cast<Eigen::Index>(i)).transpose());
      *sink << "time,value\n";
      for (Eigen::Index k = 0; k < f.size(); ++k) {
        *sink << format_double(f.knots()[k]) << ',' << format_double(f.values()[k]) << '\n';
      }
      sink.close(a.out);
      return;
    }
    throw Error(ErrorKind::Validation, "player " + *a.curve + " not found among returning players");
  }

  std::vector<std::optional<double>> medians(data.size());
  parallel_for(data.size(), resolve_threads(0), [&](std::size_t i) {
    medians[i] = predict_median(m, x.row(static_cast<Eigen::Index>(i)).transpose());
  });
  *sink << "player_id,predicted_median,predicted_converter\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    *sink << data[i].subject_id << ',';
    if (medians[i]) *sink << format_double(*medians[i]);
    *sink << ',' << (medians[i] ? "true" : "false") << '\n';
  }
  sink.close(a.out);
}

struct EvaluateArgs {
  std::string input;
  std::string models = "all";
  std::string targets = "all";
  std::uint64_t seed = 0;
  ForestFlags forest;
  double train_frac = 0.30;
  int churn_window = 9;
  std::optional<int> data_end;
  std::string out_dir;
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<ModelKind> models;
  for (const auto& m : expand_list(a.models, {"cox", "rsf", "cif", "rsf-cr"})) {
    models.push_back(parse_model_kind(m));
  }
  std::vector<TimeAxis> axes;
  for (const auto& t : expand_list(a.targets, {"lifetime", "level", "playtime"})) {
    axes.push_back(parse_time_axis(t));
  }
  const auto logs = load_population(a.input);
  FeatureSpec spec{a.churn_window, a.data_end};
  EvaluationConfig cfg;
  cfg.forest = a.forest.config(a.seed);

  EvaluationReport report;
  report.seed = a.seed;
  report.train_fraction = a.train_frac;
  report.n_trees = cfg.forest.n_trees;
  report.churn_window = a.churn_window;
  for (const TimeAxis axis : axes) {
    const auto start = std::chrono::steady_clock::now();
    const auto data = build_dataset(logs, axis, true, spec);
    const auto [train, test] = stratified_split(data, {a.train_frac, true, a.seed});
    auto rows = evaluate_models(train, test, models, cfg);
    for (auto& r : rows) report.rows.push_back(std::move(r));
    err << to_string(axis) << ": "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
        << " s\n";
  }

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_text(dir / "report.json", report_json(report));
  const std::string table = report_table(report);
  write_text(dir / "report.txt", table);
  for (const auto& r : report.rows) {
    if (r.failure) {
      err << to_string(r.model) << '/' << to_string(r.axis) << " failed: " << *r.failure << "\n";
      continue;
    }
    const std::string stem = std::string(to_string(r.model)) + "_" + std::string(to_string(r.axis));
    for (const bool log_scale : {false, true}) {
      std::ostringstream csv;
      write_scatter_csv(csv, r, log_scale);
      write_text(dir / (stem + (log_scale ? "_loglog.csv" : ".csv")), csv.str());
    }
  }
  out << table;
  return report.any_failed() ? kExitData : kExitOk;
}

struct CurvesArgs {
  std::string input;
  std::string axis = "lifetime";
  std::string population = "all";
  double level = 0.95;
  std::optional<int> data_end;
  std::string out = "-";
};

void run_curves(const CurvesArgs& a, std::ostream& out) {
  if (!(a.level > 0.0 && a.level < 1.0)) {
    throw Error(ErrorKind::Config, "--level must lie in (0, 1)");
  }
  FeatureSpec spec;
  spec.data_end = a.data_end;
  auto data = build_dataset(load_population(a.input), parse_time_axis(a.axis), false, spec);
  if (a.population == "converters") data = data.filter(EventStatus::Converted);
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "population is empty");

  const auto km = kaplan_meier(data);
  const auto band = km_confidence_band(data, a.level);
  Output sink(a.out, out);
  *sink << "time,estimate,lower,upper\n";
  for (Eigen::Index k = 0; k < km.size(); ++k) {
    const double t = km.knots()[k];
    *sink << format_double(t) << ',' << format_double(1.0 - km.values()[k]) << ','
          << format_double(1.0 - band.upper(t)) << ',' << format_double(1.0 - band.lower(t))
          << '\n';
  }
  sink.close(a.out);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return kExitUsage;
    case ErrorKind::WrongEstimator:
    case ErrorKind::InvalidCurve:
    case ErrorKind::InvalidEvent:
    case ErrorKind::Shape: return kExitInternal;
    default: return kExitData;
  }
}

void report_error(std::ostream& err, bool as_json, std::string_view kind,
                  const std::string& message, int code) {
  if (as_json) {
    nlohmann::ordered_json j;
    j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    err << j.dump() << "\n";
  } else {
    err << "error: " << message << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Survival models for predicting when players start paying", "convsurv"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Print errors as JSON on stderr");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write synthetic player logs and ground truth");
  generate->add_option("--players", gen.cfg.n_players, "Players before filtering")
      ->capture_default_str();
  generate->add_option("--pu-rate", gen.cfg.pu_propensity,
                       "Converter share among returning players")
      ->capture_default_str();
  generate->add_option("--window", gen.cfg.observation_window_days, "Observation window in days")
      ->capture_default_str();
  generate->add_option("--one-time-rate", gen.cfg.one_time_comer_rate,
                       "Share of single-day players")
      ->capture_default_str();
  generate->add_option("--seed", gen.cfg.seed)->capture_default_str();
  generate->add_option("--out", gen.out, "Activity CSV path")->required();
  generate->add_option("--truth", gen.truth, "Ground-truth CSV (default <out>.truth.csv)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Fit one model on the training split");
  train->add_option("input", tr.input, "Activity CSV")->required();
  train->add_option("--model", tr.model)
      ->check(CLI::IsMember({"cox", "rsf", "cif", "rsf-cr"}))
      ->required();
  train->add_option("--target", tr.target)
      ->check(CLI::IsMember({"lifetime", "level", "playtime"}))
      ->capture_default_str();
  tr.forest.add_to(train);
  train->add_option("--seed", tr.seed)->capture_default_str();
  train->add_option("--train-frac", tr.train_frac)->capture_default_str();
  train->add_option("--churn-window", tr.churn_window,
                    "Inactive days that mark churn; enables churn labels");
  train->add_option("--data-end", tr.data_end, "Last day of observation");
  train->add_option("--out", tr.out, "Model file")->required();
  train->add_option("--summary", tr.summary, "Training summary JSON (default <out>.summary.json)");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Predict median conversion times");
  predict->add_option("--model-file", pr.model_file)->required();
  predict->add_option("input", pr.input, "Activity CSV")->required();
  predict->add_option("--out", pr.out, "Output CSV ('-' for stdout)")->capture_default_str();
  predict->add_option("--curve", pr.curve, "Emit this player's conversion incidence curve");
  predict->add_option("--data-end", pr.data_end);

  EvaluateArgs ev;
  std::optional<std::uint64_t> eval_seed;
  auto* evaluate = app.add_subcommand("evaluate", "Split, train and score models on every target");
  evaluate->add_option("input", ev.input, "Activity CSV")->required();
  evaluate->add_option("--models", ev.models, "all or comma list")->capture_default_str();
  evaluate->add_option("--targets", ev.targets, "all or comma list")->capture_default_str();
  evaluate->add_option("--seed", eval_seed)->required();
  ev.forest.add_to(evaluate);
  evaluate->add_option("--train-frac", ev.train_frac)->capture_default_str();
  evaluate->add_option("--churn-window", ev.churn_window)->capture_default_str();
  evaluate->add_option("--data-end", ev.data_end);
  evaluate->add_option("--out-dir", ev.out_dir)->required();

  CurvesArgs cv;
  auto* curves = app.add_subcommand("curves", "Population conversion incidence with band");
  curves->add_option("input", cv.input, "Activity CSV")->required();
  curves->add_option("--axis", cv.axis)
      ->check(CLI::IsMember({"lifetime", "level", "playtime"}))
      ->capture_default_str();
  curves->add_option("--population", cv.population)
      ->check(CLI::IsMember({"all", "converters"}))
      ->capture_default_str();
  curves->add_option("--level", cv.level)->capture_default_str();
  curves->add_option("--data-end", cv.data_end);
  curves->add_option("--out", cv.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    if (json_errors) {
      report_error(err, true, "usage", e.what(), kExitUsage);
    } else {
      app.exit(e, out, err);
    }
    return kExitUsage;
  }

  try {
    if (*generate) run_generate(gen, err);
    if (*train) run_train(tr, err);
    if (*predict) run_predict(pr, out);
    if (*evaluate) {
      ev.seed = *eval_seed;
      return run_evaluate(ev, out, err);
    }
    if (*curves) run_curves(cv, out);
    return kExitOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, json_errors, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error(err, json_errors, "internal", e.what(), kExitInternal);
    return kExitInternal;
  }
}

}  // namespace convsurv
