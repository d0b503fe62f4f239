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

#include "convsurv/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace convsurv {

bool EvaluationReport::any_failed() const {
  for (const auto& r : rows) {
    if (r.failure) return true;
  }
  return false;
}

std::string report_json(const EvaluationReport& report) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["format"] = "convsurv-report/1";
  doc["seed"] = report.seed;
  doc["train_fraction"] = report.train_fraction;
  doc["trees"] = report.n_trees;
  doc["churn_window"] = report.churn_window;
  doc["rmsle_population"] = "observed and predicted converters";
  doc["rate_denominator"] = "test set size";
  auto& results = doc["results"] = ordered_json::array();
  for (const auto& r : report.rows) {
    ordered_json row;
    row["model"] = to_string(r.model);
    row["axis"] = to_string(r.axis);
    row["status"] = r.failure ? "failed" : "ok";
    row["error"] = r.failure ? ordered_json(*r.failure) : ordered_json(nullptr);
    row["rmsle"] = r.rmsle ? ordered_json(*r.rmsle) : ordered_json(nullptr);
    if (r.failure) {
      row["false_negative_rate"] = nullptr;
      row["false_positive_rate"] = nullptr;
    } else {
      row["false_negative_rate"] = r.rates.false_negative;
      row["false_positive_rate"] = r.rates.false_positive;
    }
    row["false_positive_churned_rate"] = r.has_churn_column && !r.failure
                                             ? ordered_json(r.rates.false_positive_churned)
                                             : ordered_json(nullptr);
    row["n_test"] = r.n_test;
    row["n_converted"] = r.n_converted;
    row["n_scatter"] = r.n_scatter;
    results.push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

namespace {

const ModelEvaluation* find_row(const EvaluationReport& report, ModelKind model,
                                TimeAxis axis) {
  for (const auto& r : report.rows) {
    if (r.model == model && r.axis == axis) return &r;
  }
  return nullptr;
}

std::string cell(const ModelEvaluation* row, int metric) {
  if (row == nullptr) return "";
  if (row->failure) return "failed";
  double v = 0;
  switch (metric) {
    case 0:
      if (!row->rmsle) return "n/a";
      v = *row->rmsle;
      break;
    case 1: v = 100.0 * row->rates.false_negative; break;
    default: v = 100.0 * row->rates.false_positive; break;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, metric == 0 ? "%.3f" : "%.2f%%", v);
  return buf;
}

}  // namespace

std::string report_table(const EvaluationReport& report) {
  constexpr TimeAxis axes[] = {TimeAxis::Lifetime, TimeAxis::Level, TimeAxis::Playtime};
  constexpr const char* groups[] = {"RMSLE", "False Negatives", "False Positives"};
  constexpr int w = 10;
  char buf[64];
  std::string out;

  std::snprintf(buf, sizeof buf, "%-8s", "model");
  out += buf;
  for (const char* g : groups) {
    std::snprintf(buf, sizeof buf, " | %-*s", 3 * w + 2, g);
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-8s", "");
  out += buf;
  for (int g = 0; g < 3; ++g) {
    out += " |";
    for (const auto a : axes) {
      std::snprintf(buf, sizeof buf, " %*s", w, std::string(to_string(a)).c_str());
      out += buf;
    }
  }
  out += "\n" + std::string(out.find('\n'), '-') + "\n";

  for (const auto model : kAllModels) {
    bool present = false;
    for (const auto a : axes) present = present || find_row(report, model, a);
    if (!present) continue;
    std::snprintf(buf, sizeof buf, "%-8s", std::string(to_string(model)).c_str());
    out += buf;
    for (int metric = 0; metric < 3; ++metric) {
      out += " |";
      for (const auto a : axes) {
        std::snprintf(buf, sizeof buf, " %*s", w, cell(find_row(report, model, a), metric).c_str());
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

void write_scatter_csv(std::ostream& out, const ModelEvaluation& row, bool log_scale) {
  out << (log_scale ? "log1p_observed,log1p_predicted\n" : "observed,predicted\n");
  char buf[64];
  for (const auto& o : row.outcomes) {
    if (!o.observed_converted || !o.predicted_median) continue;
    double a = o.observed_time, b = *o.predicted_median;
    if (log_scale) {
      a = std::log1p(a);
      b = std::log1p(b);
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", a, b);
    out << buf;
  }
}

}  // namespace convsurv
