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

// Tree-growing chassis shared by the three forest kinds.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "convsurv/forest_models.hpp"

namespace convsurv::detail {

struct TrainingData {
  Eigen::MatrixXd x;                 // n x p
  std::vector<std::uint32_t> pos;    // number of grid times <= t_i
  std::vector<std::uint8_t> status;  // 0 censored, 1 converted, 2 churned
  Eigen::VectorXd grid;              // distinct event times
  std::vector<std::uint64_t> feature_keys;

  std::size_t n() const noexcept { return pos.size(); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x.cols()); }
};

TrainingData prepare_training(const SurvivalDataset& data);

struct SplitChoice {
  bool found = false;     // a variable was selected
  bool has_cut = false;   // ...and an admissible cutpoint exists
  std::size_t feature = 0;
  double threshold = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
};

class TreeGrower {
 public:
  TreeGrower(const TrainingData& data, ForestKind kind, const ForestConfig& cfg);

  SurvivalTree grow(std::size_t tree_index) const;

  /// `apply_stop` enables the conditional-inference alpha stop.
  SplitChoice choose_split(std::span<const std::uint32_t> samples,
                           std::uint64_t node_seed, bool apply_stop) const;

  LeafTable leaf_table(std::span<const std::uint32_t> samples) const;

 private:
  struct NodeEvents;

  NodeEvents node_events(std::span<const std::uint32_t> samples) const;
  std::vector<std::size_t> candidate_features(std::uint64_t node_seed) const;
  std::vector<double> candidate_cuts(std::span<const std::uint32_t> samples,
                                     std::size_t feature) const;
  std::size_t count_split_events(std::span<const std::uint32_t> samples) const;
  bool counts_for_split(std::uint32_t sample) const;
  // A daughter needs min_node_events events, or no events and min_node_events subjects.
  bool daughter_ok(double events, double size) const;

  SplitChoice best_logrank_split(std::span<const std::uint32_t> samples,
                                 const NodeEvents& ev,
                                 const std::vector<std::size_t>& features) const;
  SplitChoice conditional_split(std::span<const std::uint32_t> samples,
                                const NodeEvents& ev,
                                const std::vector<std::size_t>& features,
                                bool apply_stop) const;

  const TrainingData& data_;
  ForestKind kind_;
  ForestConfig cfg_;
  std::size_t mtry_;
};

}  // namespace convsurv::detail
