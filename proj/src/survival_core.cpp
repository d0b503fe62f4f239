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

#include "convsurv/survival_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace convsurv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::WrongEstimator: return "wrong-estimator";
    case ErrorKind::InvalidCurve: return "invalid-curve";
    case ErrorKind::InvalidEvent: return "invalid-event";
    case ErrorKind::InvalidModel: return "invalid-model";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::DegenerateFit: return "degenerate-fit";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::MonotoneLikelihood: return "monotone-likelihood";
    case ErrorKind::Stratification: return "stratification";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Config: return "config";
    case ErrorKind::Compatibility: return "compatibility";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

std::string_view to_string(TimeAxis axis) {
  switch (axis) {
    case TimeAxis::Lifetime: return "lifetime";
    case TimeAxis::Level: return "level";
    case TimeAxis::Playtime: return "playtime";
  }
  return "unknown";
}

std::string_view to_string(EventStatus status) {
  switch (status) {
    case EventStatus::Censored: return "censored";
    case EventStatus::Converted: return "converted";
    case EventStatus::Churned: return "churned";
  }
  return "unknown";
}

TimeAxis parse_time_axis(std::string_view text) {
  if (text == "lifetime") return TimeAxis::Lifetime;
  if (text == "level") return TimeAxis::Level;
  if (text == "playtime") return TimeAxis::Playtime;
  throw Error(ErrorKind::Config, "unknown time axis '" + std::string(text) + "'");
}

EventStatus parse_event_status(std::string_view text) {
  if (text == "censored") return EventStatus::Censored;
  if (text == "converted") return EventStatus::Converted;
  if (text == "churned") return EventStatus::Churned;
  throw Error(ErrorKind::InvalidEvent, "unknown event '" + std::string(text) + "'");
}

SurvivalDataset::SurvivalDataset(std::vector<SurvivalRecord> records,
                                 std::vector<std::string> feature_names,
                                 TimeAxis axis, bool competing_risks)
    : records_(std::move(records)),
      feature_names_(std::move(feature_names)),
      axis_(axis),
      competing_risks_(competing_risks) {
  const auto p = n_features();
  std::unordered_set<std::string> ids;
  ids.reserve(records_.size());
  for (const auto& r : records_) {
    if (!std::isfinite(r.time) || r.time < 0.0) {
      throw Error(ErrorKind::Validation,
                  "subject '" + r.subject_id + "' has a negative or non-finite time");
    }
    if (r.covariates.size() != p) {
      throw Error(ErrorKind::Shape, "subject '" + r.subject_id +
                                        "' has the wrong number of covariates");
    }
    if (!r.covariates.allFinite()) {
      throw Error(ErrorKind::Validation,
                  "subject '" + r.subject_id + "' has missing covariates");
    }
    if (!competing_risks_ && r.status == EventStatus::Churned) {
      throw Error(ErrorKind::Validation,
                  "churned subject in a single-risk dataset: '" + r.subject_id + "'");
    }
    if (!ids.insert(r.subject_id).second) {
      throw Error(ErrorKind::Validation, "duplicate subject id '" + r.subject_id + "'");
    }
  }
}

Eigen::MatrixXd SurvivalDataset::design_matrix() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records_.size()), n_features());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = records_[i].covariates.transpose();
  }
  return x;
}

Eigen::VectorXd SurvivalDataset::times() const {
  Eigen::VectorXd t(static_cast<Eigen::Index>(records_.size()));
  for (std::size_t i = 0; i < records_.size(); ++i) {
    t[static_cast<Eigen::Index>(i)] = records_[i].time;
  }
  return t;
}

std::size_t SurvivalDataset::count(EventStatus status) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(),
                    [status](const SurvivalRecord& r) { return r.status == status; }));
}

SurvivalDataset SurvivalDataset::as_single_risk() const {
  auto records = records_;
  for (auto& r : records) {
    if (r.status == EventStatus::Churned) r.status = EventStatus::Censored;
  }
  return SurvivalDataset(std::move(records), feature_names_, axis_, false);
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<SurvivalRecord> records;
  records.reserve(indices.size());
  for (auto i : indices) {
    if (i >= records_.size()) throw Error(ErrorKind::Shape, "subset index out of range");
    records.push_back(records_[i]);
  }
  return SurvivalDataset(std::move(records), feature_names_, axis_, competing_risks_);
}

SurvivalDataset SurvivalDataset::filter(EventStatus status) const {
  std::vector<SurvivalRecord> records;
  for (const auto& r : records_) {
    if (r.status == status) records.push_back(r);
  }
  return SurvivalDataset(std::move(records), feature_names_, axis_, competing_risks_);
}

std::vector<std::size_t> event_order(std::span<const SurvivalRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].time != records[b].time) return records[a].time < records[b].time;
    return is_event(records[a].status) && !is_event(records[b].status);
  });
  return order;
}

}  // namespace convsurv
