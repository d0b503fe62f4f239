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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "convsurv/step_function.hpp"
#include "convsurv/survival_core.hpp"

namespace convsurv {

enum class ForestKind { RandomSurvival, ConditionalInference, CompetingRisks };

std::string_view to_string(ForestKind kind);

/// How conditional-inference trees are combined: `Pooled` sums event and
/// at-risk counts across trees inside one product-limit, `Mean` averages the
/// per-tree Kaplan-Meier curves.
enum class Aggregation { Pooled, Mean };

std::string_view to_string(Aggregation aggregation);
Aggregation parse_aggregation(std::string_view text);

struct ForestConfig {
  std::size_t n_trees = 900;
  std::optional<std::size_t> mtry;  // default ceil(sqrt(p))
  std::size_t min_node_events = 15;  // event-free daughters need this many subjects
  bool bootstrap = true;
  double alpha = 0.05;
  std::optional<int> max_depth;
  std::uint64_t seed = 0;
  std::size_t max_cutpoints = 64;
  Aggregation aggregation = Aggregation::Pooled;
  std::size_t threads = 0;  // 0: CONVSURV_THREADS, else hardware concurrency

  std::size_t resolved_mtry(std::size_t n_features) const;
};

/// Training counts of one leaf on the model time grid.
struct LeafTable {
  std::vector<std::uint32_t> at_risk;
  std::vector<std::uint32_t> converted;
  std::vector<std::uint32_t> churned;  // empty for single-risk models
};

/// Flat binary tree. Node 0 is the root; x[feature] <= threshold goes left.
struct SurvivalTree {
  std::vector<std::int32_t> feature;  // -1 marks a leaf
  std::vector<double> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<std::int32_t> leaf;  // index into `leaves` for leaf nodes
  std::vector<LeafTable> leaves;

  std::size_t n_nodes() const noexcept { return feature.size(); }
  std::size_t route(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Per-leaf curves on the model grid, derived from the leaf counts.
struct LeafCurves {
  Eigen::VectorXd cumulative_hazard;  // Nelson-Aalen (cause-specific for CR)
  Eigen::VectorXd survival;           // KM (all-cause for CR)
  Eigen::VectorXd events;             // converted counts, for pooled aggregation
  Eigen::VectorXd at_risk;
  Eigen::VectorXd incidence_converted;  // CR only
  Eigen::VectorXd incidence_churned;    // CR only
};

class ForestModel {
 public:
  ForestModel(ForestKind kind, ForestConfig config,
              std::vector<std::string> feature_names, TimeAxis axis,
              Eigen::VectorXd time_grid, std::vector<SurvivalTree> trees);

  ForestKind kind() const noexcept { return kind_; }
  const ForestConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& feature_names() const noexcept {
    return feature_names_;
  }
  TimeAxis axis() const noexcept { return axis_; }
  const Eigen::VectorXd& time_grid() const noexcept { return grid_; }
  const std::vector<SurvivalTree>& trees() const noexcept { return trees_; }
  std::size_t n_trees() const noexcept { return trees_.size(); }

  const LeafCurves& leaf_curves(std::size_t tree, std::size_t leaf) const {
    return curves_[tree][leaf];
  }
  const LeafCurves& route(std::size_t tree,
                          const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return curves_[tree][trees_[tree].route(x)];
  }

 private:
  ForestKind kind_;
  ForestConfig config_;
  std::vector<std::string> feature_names_;
  TimeAxis axis_;
  Eigen::VectorXd grid_;
  std::vector<SurvivalTree> trees_;
  std::vector<std::vector<LeafCurves>> curves_;
};

ForestModel fit_rsf(const SurvivalDataset& data, const ForestConfig& cfg);
ForestModel fit_conditional_ensemble(const SurvivalDataset& data,
                                     const ForestConfig& cfg);
ForestModel fit_rsf_competing(const SurvivalDataset& data, const ForestConfig& cfg);
ForestModel fit_forest(ForestKind kind, const SurvivalDataset& data,
                       const ForestConfig& cfg);

/// Ensemble survival: exp(-mean H) for RSF, pooled or averaged KM for
/// conditional ensembles, mean all-cause KM for competing-risks forests.
StepFunctiond predict_forest_survival(const ForestModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& x);

/// Mean leaf Aalen-Johansen incidence; competing-risks forests only.
StepFunctiond predict_forest_incidence(const ForestModel& model,
                                       const Eigen::Ref<const Eigen::VectorXd>& x,
                                       EventStatus event);

/// Mean leaf Nelson-Aalen cumulative hazard (cause-specific for CR).
StepFunctiond ensemble_cumulative_hazard(const ForestModel& model,
                                         const Eigen::Ref<const Eigen::VectorXd>& x);

/// Median crossing of the survival curve, or of the converted incidence
/// (upward) for competing-risks forests.
std::optional<double> predict_forest_median(const ForestModel& model,
                                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// Row-wise medians, evaluated in parallel.
std::vector<std::optional<double>> predict_forest_medians(const ForestModel& model,
                                                          const Eigen::MatrixXd& x);

/// Root split chosen on `data` without bootstrap. For conditional
/// ensembles this is the variable-selection step alone (the alpha stop is
/// not applied) and `p_value` is the Bonferroni-adjusted value.
struct RootSplit {
  std::optional<std::size_t> feature;
  double threshold = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
};

RootSplit select_root_split(const SurvivalDataset& data, const ForestConfig& cfg,
                            ForestKind kind, std::uint64_t stream = 0);

}  // namespace convsurv
