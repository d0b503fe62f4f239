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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convsurv/cox_model.hpp"
#include "convsurv/forest_models.hpp"
#include "convsurv/survival_core.hpp"

namespace convsurv {

struct SplitSpec {
  double train_fraction = 0.30;
  bool stratify_on_converter = true;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Each stratum (converters, everyone else) is shuffled with its own seeded
/// stream; the smaller side of the split takes the first round(min(f, 1-f) n)
/// positions, so fractions f and 1-f give mirrored partitions. Indices are
/// returned in ascending order.
SplitIndices split_indices(const SurvivalDataset& data, const SplitSpec& spec);

std::pair<SurvivalDataset, SurvivalDataset> stratified_split(const SurvivalDataset& data,
                                                             const SplitSpec& spec);

struct PredictionOutcome {
  std::string subject_id;
  double observed_time = 0.0;
  bool observed_converted = false;
  bool observed_churned = false;
  std::optional<double> predicted_median;  // absent: predicted non-converter
};

/// Over observed converters that also carry a prediction:
/// sqrt(mean (ln(1 + predicted) - ln(1 + observed))^2).
double rmsle(std::span<const PredictionOutcome> outcomes);

struct ConfusionRates {
  double false_negative = 0.0;  // converted, no prediction
  double false_positive = 0.0;  // not converted, predicted
  double false_positive_churned = 0.0;  // ...and observed churned
};

/// All rates use the full outcome count as denominator.
ConfusionRates confusion_rates(std::span<const PredictionOutcome> outcomes);

enum class ModelKind { Cox, Rsf, Cif, RsfCr };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);
inline constexpr ModelKind kAllModels[] = {ModelKind::Cox, ModelKind::Rsf, ModelKind::Cif,
                                           ModelKind::RsfCr};

struct EvaluationConfig {
  ForestConfig forest;
  CoxOptions cox;
};

struct ModelEvaluation {
  ModelKind model = ModelKind::Cox;
  TimeAxis axis = TimeAxis::Lifetime;
  std::optional<std::string> failure;  // set when fitting or prediction failed
  std::optional<double> rmsle;         // absent when no subject qualifies
  ConfusionRates rates;
  bool has_churn_column = false;
  std::size_t n_test = 0;
  std::size_t n_converted = 0;
  std::size_t n_scatter = 0;
  std::vector<PredictionOutcome> outcomes;
};

/// Fits every requested model on `train` and scores medians on `test`.
/// Datasets may carry churn labels: single-risk models see them as censoring,
/// the competing-risks forest requires them. A failing model yields a row with
/// `failure` set and leaves the others untouched.
std::vector<ModelEvaluation> evaluate_models(const SurvivalDataset& train,
                                             const SurvivalDataset& test,
                                             std::span<const ModelKind> models,
                                             const EvaluationConfig& cfg);

}  // namespace convsurv
