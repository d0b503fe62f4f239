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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "convsurv/error.hpp"
#include "convsurv/step_function.hpp"

namespace convsurv {

/// Scale on which event times are measured.
enum class TimeAxis { Lifetime, Level, Playtime };

enum class EventStatus { Censored, Converted, Churned };

std::string_view to_string(TimeAxis axis);
std::string_view to_string(EventStatus status);
TimeAxis parse_time_axis(std::string_view text);
EventStatus parse_event_status(std::string_view text);

inline bool is_event(EventStatus s) { return s != EventStatus::Censored; }

struct SurvivalRecord {
  std::string subject_id;
  double time = 0.0;
  EventStatus status = EventStatus::Censored;
  Eigen::VectorXd covariates;
};

/// Immutable collection of censored observations on one time axis.
///
/// Construction validates every record: finite non-negative times, equal
/// covariate length, no NaNs, unique ids, and no Churned status unless the
/// dataset is flagged as competing-risks.
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<SurvivalRecord> records,
                  std::vector<std::string> feature_names, TimeAxis axis,
                  bool competing_risks);

  const std::vector<SurvivalRecord>& records() const noexcept { return records_; }
  const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<std::string>& feature_names() const noexcept {
    return feature_names_;
  }
  TimeAxis axis() const noexcept { return axis_; }
  bool competing_risks() const noexcept { return competing_risks_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  Eigen::Index n_features() const noexcept {
    return static_cast<Eigen::Index>(feature_names_.size());
  }

  /// Row-per-record covariate matrix.
  Eigen::MatrixXd design_matrix() const;
  Eigen::VectorXd times() const;
  std::size_t count(EventStatus status) const;

  /// Churned rows recoded as Censored; the result is a single-risk dataset.
  SurvivalDataset as_single_risk() const;
  SurvivalDataset subset(std::span<const std::size_t> indices) const;
  SurvivalDataset filter(EventStatus status) const;

 private:
  std::vector<SurvivalRecord> records_;
  std::vector<std::string> feature_names_;
  TimeAxis axis_;
  bool competing_risks_;
};

/// Stable order by (time, status) with events placed before censorings at
/// equal time.
std::vector<std::size_t> event_order(std::span<const SurvivalRecord> records);

}  // namespace convsurv
