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

#include "convsurv/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "convsurv/parallel.hpp"

namespace convsurv {

SplitIndices split_indices(const SurvivalDataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorKind::Config, "train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool conv = data[i].status == EventStatus::Converted;
    strata[spec.stratify_on_converter && conv ? 1 : 0].push_back(i);
  }
  if (spec.stratify_on_converter && (strata[0].empty() || strata[1].empty())) {
    throw Error(ErrorKind::Stratification,
                "stratified split needs both converters and non-converters");
  }
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "cannot split an empty dataset");

  const double small = std::min(spec.train_fraction, 1.0 - spec.train_fraction);
  const bool train_is_small = spec.train_fraction <= 0.5;
  SplitIndices out;
  for (std::uint64_t s = 0; s < 2; ++s) {
    auto& idx = strata[s];
    std::mt19937_64 rng(mix_seed(spec.seed, s + 1));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(std::llround(small * static_cast<double>(idx.size())));
    auto& first = train_is_small ? out.train : out.test;
    auto& rest = train_is_small ? out.test : out.train;
    first.insert(first.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    rest.insert(rest.end(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<SurvivalDataset, SurvivalDataset> stratified_split(const SurvivalDataset& data,
                                                             const SplitSpec& spec) {
  const auto idx = split_indices(data, spec);
  return {data.subset(idx.train), data.subset(idx.test)};
}

double rmsle(std::span<const PredictionOutcome> outcomes) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (!o.observed_converted || !o.predicted_median) continue;
    const double d = std::log1p(*o.predicted_median) - std::log1p(o.observed_time);
    sum += d * d;
    ++n;
  }
  if (n == 0) {
    throw Error(ErrorKind::UndefinedMetric,
                "rmsle needs at least one observed and predicted converter");
  }
  return std::sqrt(sum / static_cast<double>(n));
}

ConfusionRates confusion_rates(std::span<const PredictionOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorKind::EmptyInput, "no outcomes to score");
  std::size_t fn = 0, fp = 0, fp_churn = 0;
  for (const auto& o : outcomes) {
    const bool predicted = o.predicted_median.has_value();
    if (o.observed_converted && !predicted) ++fn;
    if (!o.observed_converted && predicted) {
      ++fp;
      if (o.observed_churned) ++fp_churn;
    }
  }
  const auto n = static_cast<double>(outcomes.size());
  return {static_cast<double>(fn) / n, static_cast<double>(fp) / n,
          static_cast<double>(fp_churn) / n};
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Cox: return "cox";
    case ModelKind::Rsf: return "rsf";
    case ModelKind::Cif: return "cif";
    case ModelKind::RsfCr: return "rsf-cr";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (const auto kind : kAllModels) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(ErrorKind::Config, "unknown model '" + std::string(text) +
                                     "' (expected cox, rsf, cif or rsf-cr)");
}

namespace {

std::vector<std::optional<double>> fit_and_predict(ModelKind kind,
                                                   const SurvivalDataset& train,
                                                   const SurvivalDataset& test,
                                                   const EvaluationConfig& cfg) {
  const Eigen::MatrixXd x = test.design_matrix();
  if (kind == ModelKind::Cox) {
    const CoxFit fit = fit_cox(train.as_single_risk(), cfg.cox);
    std::vector<std::optional<double>> out(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      out[i] = predict_cox_median(fit, x.row(static_cast<Eigen::Index>(i)).transpose());
    }
    return out;
  }
  if (kind == ModelKind::RsfCr) {
    if (!train.competing_risks()) {
      throw Error(ErrorKind::Config, "rsf-cr needs churn labels (set a churn window)");
    }
    return predict_forest_medians(fit_rsf_competing(train, cfg.forest), x);
  }
  const ForestKind fk =
      kind == ModelKind::Rsf ? ForestKind::RandomSurvival : ForestKind::ConditionalInference;
  return predict_forest_medians(fit_forest(fk, train.as_single_risk(), cfg.forest), x);
}

}  // namespace

std::vector<ModelEvaluation> evaluate_models(const SurvivalDataset& train,
                                             const SurvivalDataset& test,
                                             std::span<const ModelKind> models,
                                             const EvaluationConfig& cfg) {
  if (train.axis() != test.axis() || train.feature_names() != test.feature_names()) {
    throw Error(ErrorKind::Compatibility, "train and test differ in axis or features");
  }
  if (test.empty()) throw Error(ErrorKind::EmptyInput, "empty test set");

  std::vector<ModelEvaluation> rows;
  for (const ModelKind kind : models) {
    ModelEvaluation row;
    row.model = kind;
    row.axis = test.axis();
    row.n_test = test.size();
    row.n_converted = test.count(EventStatus::Converted);
    row.has_churn_column = test.competing_risks();
    try {
      const auto medians = fit_and_predict(kind, train, test, cfg);
      row.outcomes.resize(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& r = test[i];
        row.outcomes[i] = {r.subject_id, r.time, r.status == EventStatus::Converted,
                           r.status == EventStatus::Churned, medians[i]};
        if (row.outcomes[i].observed_converted && medians[i]) ++row.n_scatter;
      }
      row.rates = confusion_rates(row.outcomes);
      if (row.n_scatter > 0) row.rmsle = rmsle(row.outcomes);
    } catch (const std::exception& ex) {
      row.failure = ex.what();
      row.outcomes.clear();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace convsurv
