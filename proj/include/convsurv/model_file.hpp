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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "convsurv/cox_model.hpp"
#include "convsurv/evaluation.hpp"
#include "convsurv/forest_models.hpp"

namespace convsurv {

inline constexpr int kModelFormatVersion = 1;

/// A fitted model plus everything needed to score new logs.
///
/// On disk this is one JSON object:
///   format            "convsurv-model"
///   version           kModelFormatVersion; other versions are rejected
///   kind              cox | rsf | cif | rsf-cr
///   axis              lifetime | level | playtime
///   features          feature names, in design-matrix order
///   feature_spec_hash identifier of the feature engineering code
///   churn_window      days of inactivity defining churn, or null
///   seed              training seed
///   cox               {beta, baseline: {knots, values, left}, iterations,
///                      gradient_norm, log_partial_likelihood}
///   forest            {config, grid, trees[]}; each tree holds node arrays
///                     feature (-1 leaf), threshold, left, right, leaf, and
///                     leaves[] of run-length encoded {at_risk, converted,
///                     churned} counts on the grid as [value, run] pairs.
/// Doubles are written in shortest round-trip form, so a reloaded model
/// predicts bit-identically.
struct TrainedModel {
  ModelKind kind = ModelKind::Cox;
  TimeAxis axis = TimeAxis::Lifetime;
  std::vector<std::string> feature_names;
  std::string feature_hash;
  std::optional<int> churn_window;
  std::uint64_t seed = 0;
  std::variant<CoxFit, ForestModel> model;
};

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// Median prediction: survival crossing for Cox, RSF and conditional
/// ensembles; converted-incidence crossing for the competing-risks forest.
std::optional<double> predict_median(const TrainedModel& model,
                                     const Eigen::Ref<const Eigen::VectorXd>& x);

/// Cumulative incidence of conversion: 1 - S, or the Aalen-Johansen
/// ensemble for the competing-risks forest.
StepFunctiond predict_incidence(const TrainedModel& model,
                                const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace convsurv
