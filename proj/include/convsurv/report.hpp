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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "convsurv/evaluation.hpp"

namespace convsurv {

struct EvaluationReport {
  std::uint64_t seed = 0;
  double train_fraction = 0.30;
  std::size_t n_trees = 0;
  int churn_window = 0;
  std::vector<ModelEvaluation> rows;

  bool any_failed() const;
};

/// JSON document, format "convsurv-report/1":
///   seed, train_fraction, trees, churn_window,
///   rmsle_population   "observed and predicted converters"
///   rate_denominator   "test set size"
///   results[]          model, axis, status ("ok" | "failed"), error,
///                      rmsle (null when undefined), false_negative_rate,
///                      false_positive_rate, false_positive_churned_rate,
///                      n_test, n_converted, n_scatter
std::string report_json(const EvaluationReport& report);

/// Aligned text table: one line per model; RMSLE, false negatives and false
/// positives, each split by lifetime, level and playtime.
std::string report_table(const EvaluationReport& report);

/// `observed,predicted` rows for observed-and-predicted converters, or
/// `log1p_observed,log1p_predicted` when `log_scale` is set.
void write_scatter_csv(std::ostream& out, const ModelEvaluation& row, bool log_scale);

}  // namespace convsurv
