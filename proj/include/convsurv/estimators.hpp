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
#include <vector>

#include <Eigen/Core>

#include "convsurv/step_function.hpp"
#include "convsurv/survival_core.hpp"

namespace convsurv {

/// Counts at each distinct event time t_k (events of any type).
///
/// `censored[k]` holds censorings in [t_k, t_{k+1}); censorings before the
/// first event time are kept in `censored_before_first`. At a shared time,
/// censored subjects are still at risk for the events at that time.
struct RiskTable {
  Eigen::VectorXd event_times;
  std::vector<std::int64_t> at_risk;
  std::vector<std::int64_t> converted;
  std::vector<std::int64_t> churned;
  std::vector<std::int64_t> censored;
  std::int64_t censored_before_first = 0;

  std::size_t size() const noexcept { return at_risk.size(); }
  std::int64_t events(std::size_t k) const { return converted[k] + churned[k]; }
  std::int64_t events(std::size_t k, EventStatus type) const;
};

RiskTable risk_table(const SurvivalDataset& data);

StepFunctiond kaplan_meier(const SurvivalDataset& data);
StepFunctiond nelson_aalen(const SurvivalDataset& data);

/// Kaplan-Meier survival treating every event type as an event. Accepts
/// competing-risks datasets.
StepFunctiond all_cause_kaplan_meier(const SurvivalDataset& data);

/// Cumulative incidence of `event` under competing risks:
///   CIF_j(t) = sum_{t_k <= t} S(t_{k-1}) d_j(t_k) / Q(t_k)
/// with S the all-cause Kaplan-Meier.
StepFunctiond aalen_johansen(const SurvivalDataset& data, EventStatus event);

struct ConfidenceBand {
  StepFunctiond lower;
  StepFunctiond upper;
};

/// Pointwise Greenwood band for the Kaplan-Meier curve, built on the log
/// scale and clipped to [0, 1].
ConfidenceBand km_confidence_band(const SurvivalDataset& data, double level);

}  // namespace convsurv
