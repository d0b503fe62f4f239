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

#include "convsurv/forest_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "convsurv/parallel.hpp"
#include "forest_grow.hpp"

namespace convsurv {

std::string_view to_string(ForestKind kind) {
  switch (kind) {
    case ForestKind::RandomSurvival: return "rsf";
    case ForestKind::ConditionalInference: return "cif";
    case ForestKind::CompetingRisks: return "rsf-cr";
  }
  return "unknown";
}

std::string_view to_string(Aggregation aggregation) {
  return aggregation == Aggregation::Pooled ? "pooled" : "mean";
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "pooled") return Aggregation::Pooled;
  if (text == "mean") return Aggregation::Mean;
  throw Error(ErrorKind::Config, "unknown aggregation '" + std::string(text) + "'");
}

std::size_t ForestConfig::resolved_mtry(std::size_t n_features) const {
  if (mtry) return *mtry;
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

std::size_t resolve_threads(std::size_t requested) {
  std::size_t cap = 0;
  if (const char* env = std::getenv("CONVSURV_THREADS")) {
    cap = static_cast<std::size_t>(std::strtoul(env, nullptr, 10));
  }
  std::size_t threads = requested;
  if (threads == 0) threads = cap;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (cap > 0) threads = std::min(threads, cap);
  return threads;
}

std::size_t SurvivalTree::route(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    node = static_cast<std::size_t>(x[feature[node]] <= threshold[node] ? left[node]
                                                                         : right[node]);
  }
  return static_cast<std::size_t>(leaf[node]);
}

namespace {

LeafCurves make_leaf_curves(const LeafTable& table, ForestKind kind,
                            Aggregation aggregation, Eigen::Index g) {
  if (static_cast<Eigen::Index>(table.at_risk.size()) != g ||
      static_cast<Eigen::Index>(table.converted.size()) != g ||
      (kind == ForestKind::CompetingRisks &&
       static_cast<Eigen::Index>(table.churned.size()) != g)) {
    throw Error(ErrorKind::InvalidModel, "leaf table does not match the time grid");
  }
  LeafCurves c;
  const bool cr = kind == ForestKind::CompetingRisks;
  const bool need_hazard = kind != ForestKind::ConditionalInference;
  const bool need_survival = kind != ForestKind::RandomSurvival;
  const bool need_counts =
      kind == ForestKind::ConditionalInference && aggregation == Aggregation::Pooled;
  if (need_hazard) c.cumulative_hazard.resize(g);
  if (need_survival) c.survival.resize(g);
  if (need_counts) {
    c.events.resize(g);
    c.at_risk.resize(g);
  }
  if (cr) {
    c.incidence_converted.resize(g);
    c.incidence_churned.resize(g);
  }
  double h = 0.0, s = 1.0, cif1 = 0.0, cif2 = 0.0;
  for (Eigen::Index k = 0; k < g; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const double q = table.at_risk[uk];
    const double d1 = table.converted[uk];
    const double d2 = cr ? static_cast<double>(table.churned[uk]) : 0.0;
    if (q > 0.0) {
      h += d1 / q;
      cif1 += s * d1 / q;
      cif2 += s * d2 / q;
      s *= 1.0 - (d1 + d2) / q;
    }
    if (need_hazard) c.cumulative_hazard[k] = h;
    if (need_survival) c.survival[k] = s;
    if (need_counts) {
      c.events[k] = d1;
      c.at_risk[k] = q;
    }
    if (cr) {
      c.incidence_converted[k] = cif1;
      c.incidence_churned[k] = cif2;
    }
  }
  return c;
}

void check_shape(const ForestModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != static_cast<Eigen::Index>(model.feature_names().size())) {
    throw Error(ErrorKind::Shape, "covariate vector length does not match the forest");
  }
}

template <typename Field>
Eigen::VectorXd tree_mean(const ForestModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                          Field field) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.time_grid().size());
  for (std::size_t t = 0; t < model.n_trees(); ++t) acc += field(model.route(t, x));
  return acc / static_cast<double>(model.n_trees());
}

ForestModel fit_checked(ForestKind kind, const SurvivalDataset& data, const ForestConfig& cfg) {
  if (cfg.n_trees == 0) throw Error(ErrorKind::Config, "n_trees must be positive");
  if (cfg.min_node_events == 0) throw Error(ErrorKind::Config, "min_node_events must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(ErrorKind::Config, "alpha must lie in (0,1)");
  if (cfg.max_cutpoints == 0) throw Error(ErrorKind::Config, "max_cutpoints must be positive");
  const auto p = static_cast<std::size_t>(data.n_features());
  if (p == 0) throw Error(ErrorKind::Config, "forest needs at least one feature");
  const auto mtry = cfg.resolved_mtry(p);
  if (mtry == 0 || mtry > p) throw Error(ErrorKind::Config, "mtry must lie in [1, feature count]");
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "training dataset is empty");

  if (kind == ForestKind::CompetingRisks) {
    if (!data.competing_risks()) {
      throw Error(ErrorKind::Config,
                  "competing-risks forest needs a dataset with churn labels");
    }
  } else if (data.competing_risks()) {
    throw Error(ErrorKind::WrongEstimator,
                "single-risk forest applied to a competing-risks dataset");
  }
  const auto events = data.count(EventStatus::Converted);
  if (events == 0 || events < cfg.min_node_events) {
    throw Error(ErrorKind::DegenerateFit,
                "too few conversion events (" + std::to_string(events) +
                    ") for min_node_events = " + std::to_string(cfg.min_node_events));
  }

  const auto training = detail::prepare_training(data);
  const detail::TreeGrower grower(training, kind, cfg);
  std::vector<SurvivalTree> trees(cfg.n_trees);
  parallel_for(cfg.n_trees, resolve_threads(cfg.threads),
               [&](std::size_t t) { trees[t] = grower.grow(t); });
  return ForestModel(kind, cfg, data.feature_names(), data.axis(), training.grid,
                     std::move(trees));
}

}  // namespace

ForestModel::ForestModel(ForestKind kind, ForestConfig config,
                         std::vector<std::string> feature_names, TimeAxis axis,
                         Eigen::VectorXd time_grid, std::vector<SurvivalTree> trees)
    : kind_(kind),
      config_(std::move(config)),
      feature_names_(std::move(feature_names)),
      axis_(axis),
      grid_(std::move(time_grid)),
      trees_(std::move(trees)) {
  if (trees_.empty()) throw Error(ErrorKind::InvalidModel, "forest has no trees");
  for (Eigen::Index k = 1; k < grid_.size(); ++k) {
    if (!(grid_[k - 1] < grid_[k])) {
      throw Error(ErrorKind::InvalidModel, "forest time grid is not increasing");
    }
  }
  const auto p = static_cast<std::int32_t>(feature_names_.size());
  curves_.resize(trees_.size());
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto& tree = trees_[t];
    const auto nodes = tree.n_nodes();
    if (nodes == 0 || tree.threshold.size() != nodes || tree.left.size() != nodes ||
        tree.right.size() != nodes || tree.leaf.size() != nodes) {
      throw Error(ErrorKind::InvalidModel, "malformed tree arrays");
    }
    for (std::size_t n = 0; n < nodes; ++n) {
      if (tree.feature[n] >= p) throw Error(ErrorKind::InvalidModel, "split feature out of range");
      if (tree.feature[n] < 0) {
        if (tree.leaf[n] < 0 || static_cast<std::size_t>(tree.leaf[n]) >= tree.leaves.size()) {
          throw Error(ErrorKind::InvalidModel, "leaf index out of range");
        }
      } else {
        const auto l = tree.left[n], r = tree.right[n];
        if (l <= static_cast<std::int32_t>(n) || r <= static_cast<std::int32_t>(n) ||
            static_cast<std::size_t>(l) >= nodes || static_cast<std::size_t>(r) >= nodes) {
          throw Error(ErrorKind::InvalidModel, "child offset out of range");
        }
      }
    }
    curves_[t].reserve(tree.leaves.size());
    for (const auto& leaf : tree.leaves) {
      curves_[t].push_back(make_leaf_curves(leaf, kind_, config_.aggregation, grid_.size()));
    }
  }
}

ForestModel fit_rsf(const SurvivalDataset& data, const ForestConfig& cfg) {
  return fit_checked(ForestKind::RandomSurvival, data, cfg);
}

ForestModel fit_conditional_ensemble(const SurvivalDataset& data, const ForestConfig& cfg) {
  return fit_checked(ForestKind::ConditionalInference, data, cfg);
}

ForestModel fit_rsf_competing(const SurvivalDataset& data, const ForestConfig& cfg) {
  return fit_checked(ForestKind::CompetingRisks, data, cfg);
}

ForestModel fit_forest(ForestKind kind, const SurvivalDataset& data, const ForestConfig& cfg) {
  return fit_checked(kind, data, cfg);
}

StepFunctiond predict_forest_survival(const ForestModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_shape(model, x);
  Eigen::VectorXd values;
  switch (model.kind()) {
    case ForestKind::RandomSurvival:
      values = tree_mean(model, x, [](const LeafCurves& c) -> const Eigen::VectorXd& {
        return c.cumulative_hazard;
      });
      // Scalar exp with a running minimum: packet exp is not monotone to the ulp.
      for (Eigen::Index k = 0; k < values.size(); ++k) {
        values[k] = std::exp(-values[k]);
        if (k > 0) values[k] = std::min(values[k], values[k - 1]);
      }
      break;
    case ForestKind::ConditionalInference:
      if (model.config().aggregation == Aggregation::Pooled) {
        const auto g = model.time_grid().size();
        Eigen::VectorXd events = Eigen::VectorXd::Zero(g);
        Eigen::VectorXd at_risk = Eigen::VectorXd::Zero(g);
        for (std::size_t t = 0; t < model.n_trees(); ++t) {
          const auto& c = model.route(t, x);
          events += c.events;
          at_risk += c.at_risk;
        }
        values.resize(g);
        double s = 1.0;
        for (Eigen::Index k = 0; k < g; ++k) {
          if (at_risk[k] > 0.0) s *= 1.0 - events[k] / at_risk[k];
          values[k] = s;
        }
      } else {
        values = tree_mean(model, x, [](const LeafCurves& c) -> const Eigen::VectorXd& {
          return c.survival;
        });
      }
      break;
    case ForestKind::CompetingRisks:
      values = tree_mean(model, x, [](const LeafCurves& c) -> const Eigen::VectorXd& {
        return c.survival;
      });
      break;
  }
  return StepFunctiond(model.time_grid(), std::move(values), 1.0);
}

StepFunctiond predict_forest_incidence(const ForestModel& model,
                                       const Eigen::Ref<const Eigen::VectorXd>& x,
                                       EventStatus event) {
  if (model.kind() != ForestKind::CompetingRisks) {
    throw Error(ErrorKind::InvalidModel, "incidence prediction needs a competing-risks forest");
  }
  if (event == EventStatus::Censored) {
    throw Error(ErrorKind::InvalidEvent, "censoring is not an event type");
  }
  check_shape(model, x);
  Eigen::VectorXd values =
      event == EventStatus::Converted
          ? tree_mean(model, x, [](const LeafCurves& c) -> const Eigen::VectorXd& {
              return c.incidence_converted;
            })
          : tree_mean(model, x, [](const LeafCurves& c) -> const Eigen::VectorXd& {
              return c.incidence_churned;
            });
  return StepFunctiond(model.time_grid(), std::move(values), 0.0);
}

StepFunctiond ensemble_cumulative_hazard(const ForestModel& model,
                                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (model.kind() == ForestKind::ConditionalInference) {
    throw Error(ErrorKind::InvalidModel,
                "conditional-inference leaves store Kaplan-Meier curves, not hazards");
  }
  check_shape(model, x);
  return StepFunctiond(model.time_grid(),
                       tree_mean(model, x, [](const LeafCurves& c) -> const Eigen::VectorXd& {
                         return c.cumulative_hazard;
                       }),
                       0.0);
}

std::optional<double> predict_forest_median(const ForestModel& model,
                                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (model.kind() == ForestKind::CompetingRisks) {
    return median_crossing(predict_forest_incidence(model, x, EventStatus::Converted), 0.5);
  }
  return median_crossing(predict_forest_survival(model, x), 0.5);
}

std::vector<std::optional<double>> predict_forest_medians(const ForestModel& model,
                                                          const Eigen::MatrixXd& x) {
  std::vector<std::optional<double>> out(static_cast<std::size_t>(x.rows()));
  parallel_for(out.size(), resolve_threads(model.config().threads), [&](std::size_t i) {
    const Eigen::VectorXd row = x.row(static_cast<Eigen::Index>(i)).transpose();
    out[i] = predict_forest_median(model, row);
  });
  return out;
}

RootSplit select_root_split(const SurvivalDataset& data, const ForestConfig& cfg,
                            ForestKind kind, std::uint64_t stream) {
  const auto training = detail::prepare_training(data);
  const detail::TreeGrower grower(training, kind, cfg);
  std::vector<std::uint32_t> samples(data.size());
  std::iota(samples.begin(), samples.end(), 0u);
  const auto choice =
      grower.choose_split(samples, mix_seed(mix_seed(cfg.seed, stream), 1), false);
  RootSplit out;
  if (choice.found) {
    out.feature = choice.feature;
    out.threshold = choice.threshold;
    out.statistic = choice.statistic;
    out.p_value = choice.p_value;
  }
  return out;
}

}  // namespace convsurv
