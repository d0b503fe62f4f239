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

#include "forest_grow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "convsurv/parallel.hpp"
#include "convsurv/stats.hpp"

namespace convsurv::detail {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB0075742ULL;
constexpr std::uint64_t kRootPath = 1;

}  // namespace

TrainingData prepare_training(const SurvivalDataset& data) {
  TrainingData out;
  out.x = data.design_matrix();
  const auto& records = data.records();
  std::vector<double> times;
  for (const auto& r : records) {
    if (is_event(r.status)) times.push_back(r.time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  out.grid = Eigen::Map<const Eigen::VectorXd>(times.data(),
                                               static_cast<Eigen::Index>(times.size()));
  out.pos.reserve(records.size());
  out.status.reserve(records.size());
  for (const auto& r : records) {
    out.pos.push_back(static_cast<std::uint32_t>(
        std::upper_bound(times.begin(), times.end(), r.time) - times.begin()));
    out.status.push_back(static_cast<std::uint8_t>(
        r.status == EventStatus::Converted ? 1 : r.status == EventStatus::Churned ? 2 : 0));
  }
  for (const auto& name : data.feature_names()) out.feature_keys.push_back(fnv1a(name));
  return out;
}

// Node-local view of the event times for the event of interest (converted).
struct TreeGrower::NodeEvents {
  std::vector<std::uint32_t> times;    // sorted distinct grid indices
  std::vector<std::uint32_t> risk_end; // per sample: at risk at times[0..risk_end)
  std::vector<std::int32_t> event_at;  // per sample: index into times, or -1
  std::vector<double> at_risk;         // Y_k
  std::vector<double> deaths;          // D_k
  std::size_t split_events = 0;
};

TreeGrower::TreeGrower(const TrainingData& data, ForestKind kind, const ForestConfig& cfg)
    : data_(data), kind_(kind), cfg_(cfg), mtry_(cfg.resolved_mtry(data.p())) {}

bool TreeGrower::daughter_ok(double events, double size) const {
  const double m = static_cast<double>(cfg_.min_node_events);
  return events >= m || (events == 0.0 && size >= m);
}

bool TreeGrower::counts_for_split(std::uint32_t sample) const {
  const auto s = data_.status[sample];
  return kind_ == ForestKind::CompetingRisks ? s != 0 : s == 1;
}

std::size_t TreeGrower::count_split_events(std::span<const std::uint32_t> samples) const {
  std::size_t n = 0;
  for (const auto i : samples) n += counts_for_split(i) ? 1 : 0;
  return n;
}

TreeGrower::NodeEvents TreeGrower::node_events(std::span<const std::uint32_t> samples) const {
  NodeEvents ev;
  for (const auto i : samples) {
    if (data_.status[i] == 1) ev.times.push_back(data_.pos[i] - 1);
  }
  std::sort(ev.times.begin(), ev.times.end());
  ev.times.erase(std::unique(ev.times.begin(), ev.times.end()), ev.times.end());
  const std::size_t k = ev.times.size();
  ev.at_risk.assign(k, 0.0);
  ev.deaths.assign(k, 0.0);
  ev.risk_end.resize(samples.size());
  ev.event_at.resize(samples.size());
  std::vector<double> exits(k + 1, 0.0);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto i = samples[s];
    const auto r = static_cast<std::uint32_t>(
        std::lower_bound(ev.times.begin(), ev.times.end(), data_.pos[i]) - ev.times.begin());
    ev.risk_end[s] = r;
    exits[r] += 1.0;
    if (data_.status[i] == 1) {
      ev.event_at[s] = static_cast<std::int32_t>(r - 1);
      ev.deaths[r - 1] += 1.0;
    } else {
      ev.event_at[s] = -1;
    }
    if (counts_for_split(i)) ++ev.split_events;
  }
  double running = 0.0;
  for (std::size_t j = k; j-- > 0;) {
    running += exits[j + 1];
    ev.at_risk[j] = running;
  }
  return ev;
}

std::vector<std::size_t> TreeGrower::candidate_features(std::uint64_t node_seed) const {
  // Draw keyed by feature identity so that column order does not matter.
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(data_.p());
  for (std::size_t f = 0; f < data_.p(); ++f) {
    keyed.emplace_back(mix_seed(node_seed, data_.feature_keys[f]), f);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < mtry_ && j < keyed.size(); ++j) out.push_back(keyed[j].second);
  return out;
}

std::vector<double> TreeGrower::candidate_cuts(std::span<const std::uint32_t> samples,
                                               std::size_t feature) const {
  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto i : samples) values.push_back(data_.x(i, static_cast<Eigen::Index>(feature)));
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> cuts;
  if (distinct.size() < 2) return cuts;
  if (distinct.size() - 1 <= cfg_.max_cutpoints) {
    cuts.reserve(distinct.size() - 1);
    for (std::size_t j = 0; j + 1 < distinct.size(); ++j) {
      cuts.push_back(0.5 * (distinct[j] + distinct[j + 1]));
    }
    return cuts;
  }
  // Sample quantiles, each mapped to the midpoint above its distinct value.
  const std::size_t n = values.size();
  const std::size_t c = cfg_.max_cutpoints;
  for (std::size_t s = 1; s <= c; ++s) {
    const double v = values[std::min(n - 1, s * n / (c + 1))];
    const auto j = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
    if (j + 1 >= distinct.size()) continue;
    const double cut = 0.5 * (distinct[j] + distinct[j + 1]);
    if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
  }
  return cuts;
}

SplitChoice TreeGrower::best_logrank_split(std::span<const std::uint32_t> samples,
                                           const NodeEvents& ev,
                                           const std::vector<std::size_t>& features) const {
  SplitChoice best;
  const std::size_t k_times = ev.times.size();
  if (k_times == 0) return best;
  const std::size_t n = samples.size();
  const double total_events = static_cast<double>(ev.split_events);

  std::vector<double> exits, deaths, bin_events, bin_size;
  std::vector<double> left_exits(k_times + 1), left_deaths(k_times), left_risk(k_times);
  for (const auto f : features) {
    const auto cuts = candidate_cuts(samples, f);
    if (cuts.empty()) continue;
    const std::size_t bins = cuts.size() + 1;
    exits.assign(bins * (k_times + 1), 0.0);
    deaths.assign(bins * k_times, 0.0);
    bin_events.assign(bins, 0.0);
    bin_size.assign(bins, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const auto i = samples[s];
      const double v = data_.x(i, static_cast<Eigen::Index>(f));
      const auto b = static_cast<std::size_t>(
          std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
      exits[b * (k_times + 1) + ev.risk_end[s]] += 1.0;
      if (ev.event_at[s] >= 0) deaths[b * k_times + static_cast<std::size_t>(ev.event_at[s])] += 1.0;
      if (counts_for_split(i)) bin_events[b] += 1.0;
      bin_size[b] += 1.0;
    }
    std::fill(left_exits.begin(), left_exits.end(), 0.0);
    std::fill(left_deaths.begin(), left_deaths.end(), 0.0);
    double left_events = 0.0;
    double left_n = 0.0;
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      for (std::size_t r = 0; r <= k_times; ++r) left_exits[r] += exits[c * (k_times + 1) + r];
      for (std::size_t j = 0; j < k_times; ++j) left_deaths[j] += deaths[c * k_times + j];
      left_events += bin_events[c];
      left_n += bin_size[c];
      if (bin_size[c] == 0.0 && c > 0) continue;
      if (left_n == 0.0 || left_n == static_cast<double>(n)) continue;
      if (!daughter_ok(left_events, left_n) ||
          !daughter_ok(total_events - left_events, static_cast<double>(n) - left_n)) {
        continue;
      }
      double running = 0.0;
      for (std::size_t j = k_times; j-- > 0;) {
        running += left_exits[j + 1];
        left_risk[j] = running;
      }
      double num = 0.0;
      double var = 0.0;
      for (std::size_t j = 0; j < k_times; ++j) {
        const double y = ev.at_risk[j];
        const double d = ev.deaths[j];
        if (d == 0.0) continue;
        const double share = left_risk[j] / y;
        num += left_deaths[j] - d * share;
        if (y > 1.0) var += share * (1.0 - share) * (y - d) / (y - 1.0) * d;
      }
      if (var <= 0.0) continue;
      const double stat = std::abs(num) / std::sqrt(var);
      if (!best.found || stat > best.statistic) {
        best.found = true;
        best.has_cut = true;
        best.feature = f;
        best.threshold = cuts[c];
        best.statistic = stat;
      }
    }
  }
  if (best.found) best.p_value = 2.0 * stats::normal_sf(best.statistic);
  return best;
}

SplitChoice TreeGrower::conditional_split(std::span<const std::uint32_t> samples,
                                          const NodeEvents& ev,
                                          const std::vector<std::size_t>& features,
                                          bool apply_stop) const {
  SplitChoice choice;
  const std::size_t n = samples.size();
  if (ev.times.empty() || n < 2) return choice;

  // Log-rank scores: event indicator minus node Nelson-Aalen at the subject's time.
  std::vector<double> cum_hazard(ev.times.size() + 1, 0.0);
  for (std::size_t j = 0; j < ev.times.size(); ++j) {
    cum_hazard[j + 1] = cum_hazard[j] + ev.deaths[j] / ev.at_risk[j];
  }
  std::vector<double> scores(n);
  double mean = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    scores[s] = (ev.event_at[s] >= 0 ? 1.0 : 0.0) - cum_hazard[ev.risk_end[s]];
    mean += scores[s];
  }
  mean /= static_cast<double>(n);
  double score_ss = 0.0;
  for (auto& a : scores) {
    a -= mean;
    score_ss += a * a;
  }
  if (score_ss <= 0.0) return choice;
  const double nd = static_cast<double>(n);

  // Step 1: association of each candidate variable with the scores.
  double best_z = -1.0;
  for (const auto f : features) {
    double sx = 0.0, sxx = 0.0, t = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double v = data_.x(samples[s], static_cast<Eigen::Index>(f));
      sx += v;
      sxx += v * v;
      t += v * scores[s];
    }
    const double var = score_ss / (nd * (nd - 1.0)) * (nd * sxx - sx * sx);
    if (!(var > 1e-300)) continue;
    const double z = std::abs(t) / std::sqrt(var);
    if (z > best_z) {
      best_z = z;
      choice.feature = f;
    }
  }
  if (best_z < 0.0) return choice;
  choice.found = true;
  choice.statistic = best_z;
  const double p = 2.0 * stats::normal_sf(best_z);
  choice.p_value = std::min(1.0, p * static_cast<double>(features.size()));
  if (apply_stop && choice.p_value > cfg_.alpha) {
    choice.found = false;
    return choice;
  }

  // Step 2: cutpoint maximizing the standardized two-sample statistic.
  const auto cuts = candidate_cuts(samples, choice.feature);
  if (cuts.empty()) return choice;
  const std::size_t bins = cuts.size() + 1;
  std::vector<double> bin_score(bins, 0.0), bin_size(bins, 0.0), bin_events(bins, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double v = data_.x(samples[s], static_cast<Eigen::Index>(choice.feature));
    const auto b = static_cast<std::size_t>(
        std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    bin_score[b] += scores[s];
    bin_size[b] += 1.0;
    if (counts_for_split(samples[s])) bin_events[b] += 1.0;
  }
  const double total_events = static_cast<double>(ev.split_events);
  double left_score = 0.0, left_n = 0.0, left_events = 0.0;
  double best_stat = -1.0;
  for (std::size_t c = 0; c < cuts.size(); ++c) {
    left_score += bin_score[c];
    left_n += bin_size[c];
    left_events += bin_events[c];
    if (left_n == 0.0 || left_n == nd) continue;
    if (!daughter_ok(left_events, left_n) || !daughter_ok(total_events - left_events, nd - left_n)) {
      continue;
    }
    const double var = left_n * (nd - left_n) / (nd * (nd - 1.0)) * score_ss;
    if (!(var > 0.0)) continue;
    const double stat = std::abs(left_score) / std::sqrt(var);
    if (stat > best_stat) {
      best_stat = stat;
      choice.threshold = cuts[c];
      choice.has_cut = true;
    }
  }
  return choice;
}

SplitChoice TreeGrower::choose_split(std::span<const std::uint32_t> samples,
                                     std::uint64_t node_seed, bool apply_stop) const {
  const auto ev = node_events(samples);
  const auto features = candidate_features(node_seed);
  if (kind_ == ForestKind::ConditionalInference) {
    return conditional_split(samples, ev, features, apply_stop);
  }
  return best_logrank_split(samples, ev, features);
}

LeafTable TreeGrower::leaf_table(std::span<const std::uint32_t> samples) const {
  const std::size_t g = static_cast<std::size_t>(data_.grid.size());
  LeafTable leaf;
  leaf.at_risk.assign(g, 0);
  leaf.converted.assign(g, 0);
  if (kind_ == ForestKind::CompetingRisks) leaf.churned.assign(g, 0);
  std::vector<std::uint32_t> exits(g + 1, 0);
  for (const auto i : samples) {
    const auto p = data_.pos[i];
    ++exits[p];
    if (data_.status[i] == 1) ++leaf.converted[p - 1];
    if (data_.status[i] == 2 && kind_ == ForestKind::CompetingRisks) ++leaf.churned[p - 1];
  }
  std::uint32_t running = 0;
  for (std::size_t k = g; k-- > 0;) {
    running += exits[k + 1];
    leaf.at_risk[k] = running;
  }
  return leaf;
}

SurvivalTree TreeGrower::grow(std::size_t tree_index) const {
  const std::uint64_t tree_seed = mix_seed(cfg_.seed, tree_index);
  const std::size_t n = data_.n();
  std::vector<std::uint32_t> root(n);
  if (cfg_.bootstrap) {
    std::mt19937_64 rng(mix_seed(tree_seed, kBootstrapStream));
    std::uniform_int_distribution<std::uint32_t> draw(0, static_cast<std::uint32_t>(n - 1));
    for (auto& i : root) i = draw(rng);
    std::sort(root.begin(), root.end());
  } else {
    std::iota(root.begin(), root.end(), 0u);
  }

  SurvivalTree tree;
  auto add_node = [&tree]() {
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.leaf.push_back(-1);
    return static_cast<std::int32_t>(tree.feature.size() - 1);
  };

  struct Pending {
    std::int32_t node;
    std::vector<std::uint32_t> samples;
    int depth;
    std::uint64_t path;
  };
  std::vector<Pending> stack;
  stack.push_back({add_node(), std::move(root), 0, kRootPath});
  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    SplitChoice split;
    const bool depth_ok = !cfg_.max_depth || cur.depth < *cfg_.max_depth;
    if (depth_ok && count_split_events(cur.samples) >= cfg_.min_node_events) {
      split = choose_split(cur.samples, mix_seed(tree_seed, cur.path), true);
    }
    if (!split.found || !split.has_cut) {
      tree.leaf[static_cast<std::size_t>(cur.node)] = static_cast<std::int32_t>(tree.leaves.size());
      tree.leaves.push_back(leaf_table(cur.samples));
      continue;
    }
    std::vector<std::uint32_t> left, right;
    for (const auto i : cur.samples) {
      (data_.x(i, static_cast<Eigen::Index>(split.feature)) <= split.threshold ? left : right)
          .push_back(i);
    }
    const auto l = add_node();
    const auto r = add_node();
    const auto node = static_cast<std::size_t>(cur.node);
    tree.feature[node] = static_cast<std::int32_t>(split.feature);
    tree.threshold[node] = split.threshold;
    tree.left[node] = l;
    tree.right[node] = r;
    stack.push_back({r, std::move(right), cur.depth + 1, mix_seed(cur.path, 2)});
    stack.push_back({l, std::move(left), cur.depth + 1, mix_seed(cur.path, 1)});
  }
  return tree;
}

}  // namespace convsurv::detail
