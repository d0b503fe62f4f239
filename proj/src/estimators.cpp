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

#include "convsurv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convsurv/stats.hpp"

namespace convsurv {

namespace {

void require_nonempty(const SurvivalDataset& data) {
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "dataset is empty");
}

void require_single_risk(const SurvivalDataset& data) {
  if (data.competing_risks()) {
    throw Error(ErrorKind::WrongEstimator,
                "single-risk estimator applied to a competing-risks dataset; "
                "use aalen_johansen or all_cause_kaplan_meier");
  }
}

StepFunctiond::Vector product_limit(const RiskTable& table) {
  StepFunctiond::Vector values(static_cast<Eigen::Index>(table.size()));
  double s = 1.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    s *= 1.0 - static_cast<double>(table.events(k)) /
                   static_cast<double>(table.at_risk[k]);
    values[static_cast<Eigen::Index>(k)] = s;
  }
  return values;
}

}  // namespace

std::int64_t RiskTable::events(std::size_t k, EventStatus type) const {
  switch (type) {
    case EventStatus::Converted: return converted[k];
    case EventStatus::Churned: return churned[k];
    case EventStatus::Censored: break;
  }
  throw Error(ErrorKind::InvalidEvent, "censoring is not an event type");
}

RiskTable risk_table(const SurvivalDataset& data) {
  require_nonempty(data);
  const auto& records = data.records();
  const auto order = event_order(records);

  RiskTable table;
  std::vector<double> times;
  const auto n = static_cast<std::int64_t>(records.size());
  std::int64_t removed = 0;  // subjects with time strictly before the current one
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = records[order[i]].time;
    std::int64_t conv = 0, churn = 0, cens = 0;
    std::size_t j = i;
    for (; j < order.size() && records[order[j]].time == t; ++j) {
      switch (records[order[j]].status) {
        case EventStatus::Converted: ++conv; break;
        case EventStatus::Churned: ++churn; break;
        case EventStatus::Censored: ++cens; break;
      }
    }
    if (conv + churn > 0) {
      times.push_back(t);
      table.at_risk.push_back(n - removed);
      table.converted.push_back(conv);
      table.churned.push_back(churn);
      table.censored.push_back(cens);
    } else if (table.censored.empty()) {
      table.censored_before_first += cens;
    } else {
      table.censored.back() += cens;
    }
    removed += static_cast<std::int64_t>(j - i);
    i = j;
  }
  table.event_times = Eigen::Map<const Eigen::VectorXd>(
      times.data(), static_cast<Eigen::Index>(times.size()));
  return table;
}

StepFunctiond kaplan_meier(const SurvivalDataset& data) {
  require_nonempty(data);
  require_single_risk(data);
  return all_cause_kaplan_meier(data);
}

StepFunctiond all_cause_kaplan_meier(const SurvivalDataset& data) {
  const auto table = risk_table(data);
  return StepFunctiond(table.event_times, product_limit(table), 1.0);
}

StepFunctiond nelson_aalen(const SurvivalDataset& data) {
  require_nonempty(data);
  require_single_risk(data);
  const auto table = risk_table(data);
  StepFunctiond::Vector values(static_cast<Eigen::Index>(table.size()));
  double h = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    h += static_cast<double>(table.events(k)) / static_cast<double>(table.at_risk[k]);
    values[static_cast<Eigen::Index>(k)] = h;
  }
  return StepFunctiond(table.event_times, std::move(values), 0.0);
}

StepFunctiond aalen_johansen(const SurvivalDataset& data, EventStatus event) {
  if (event == EventStatus::Censored) {
    throw Error(ErrorKind::InvalidEvent, "aalen_johansen needs Converted or Churned");
  }
  if (!data.competing_risks()) {
    throw Error(ErrorKind::WrongEstimator,
                "aalen_johansen requires a competing-risks dataset");
  }
  const auto table = risk_table(data);
  StepFunctiond::Vector values(static_cast<Eigen::Index>(table.size()));
  double s_prev = 1.0;
  double cif = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const double q = static_cast<double>(table.at_risk[k]);
    cif += s_prev * static_cast<double>(table.events(k, event)) / q;
    s_prev *= 1.0 - static_cast<double>(table.events(k)) / q;
    values[static_cast<Eigen::Index>(k)] = cif;
  }
  return StepFunctiond(table.event_times, std::move(values), 0.0);
}

ConfidenceBand km_confidence_band(const SurvivalDataset& data, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorKind::Config, "confidence level must lie in (0,1)");
  }
  require_nonempty(data);
  require_single_risk(data);
  const auto table = risk_table(data);
  const double z = stats::normal_quantile(0.5 + 0.5 * level);
  const auto m = static_cast<Eigen::Index>(table.size());
  StepFunctiond::Vector lower(m), upper(m);
  double s = 1.0;
  double greenwood = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto q = static_cast<double>(table.at_risk[k]);
    const auto d = static_cast<double>(table.events(k));
    s *= 1.0 - d / q;
    const auto idx = static_cast<Eigen::Index>(k);
    if (q > d) {
      greenwood += d / (q * (q - d));
    } else {
      greenwood = std::numeric_limits<double>::infinity();
    }
    if (s <= 0.0) {
      lower[idx] = 0.0;
      upper[idx] = 0.0;
      continue;
    }
    const double half_width = z * std::sqrt(greenwood);
    lower[idx] = std::clamp(s * std::exp(-half_width), 0.0, 1.0);
    upper[idx] = std::clamp(s * std::exp(half_width), 0.0, 1.0);
  }
  return {StepFunctiond(table.event_times, std::move(lower), 1.0),
          StepFunctiond(table.event_times, std::move(upper), 1.0)};
}

}  // namespace convsurv
