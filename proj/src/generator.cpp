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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "convsurv/data_pipeline.hpp"
#include "convsurv/parallel.hpp"

namespace convsurv {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double converter_logit(double e, double s) {
  return 2.2 * s + 0.6 * e + ((e > 0.5 && s > 0.0) ? 1.2 : 0.0);
}

double conversion_log_scale(double e, double s) {
  return -0.5 * e - 0.4 * s - (e > 0.0 ? 0.6 * e * s : 0.0) + (e < -0.5 ? 0.7 : 0.0);
}

// E[sigmoid(a + g(e, s))] for independent standard normal e, s by midpoint
// quadrature on [-8, 8]^2.
double mean_conversion(double a) {
  constexpr int kSteps = 320;
  constexpr double kLo = -8.0, kH = 16.0 / kSteps;
  static const auto weights = [] {
    std::vector<double> w(kSteps);
    for (int i = 0; i < kSteps; ++i) {
      const double z = kLo + (i + 0.5) * kH;
      w[i] = std::exp(-0.5 * z * z) * kH / std::sqrt(2.0 * M_PI);
    }
    return w;
  }();
  double total = 0;
  for (int i = 0; i < kSteps; ++i) {
    const double e = kLo + (i + 0.5) * kH;
    double row = 0;
    for (int j = 0; j < kSteps; ++j) {
      row += weights[j] * sigmoid(a + converter_logit(e, kLo + (j + 0.5) * kH));
    }
    total += weights[i] * row;
  }
  return total;
}

double calibrate_intercept(double target) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_conversion(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string player_name(std::size_t index, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(6, std::to_string(n).size());
  std::string digits = std::to_string(index);
  return "p" + std::string(width - digits.size(), '0') + digits;
}

struct PlayerDraw {
  PlayerLog log;
  GroundTruth truth;
};

PlayerDraw draw_player(const GeneratorConfig& cfg, double intercept, std::size_t index) {
  std::mt19937_64 rng(mix_seed(cfg.seed, index));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const int window = cfg.observation_window_days;

  PlayerDraw out;
  out.log.player_id = player_name(index, cfg.n_players);
  out.truth.player_id = out.log.player_id;
  const int reg = std::uniform_int_distribution<int>(0, std::max(0, window / 2 - 1))(rng);
  out.log.registration_day = reg;
  const bool one_timer = unit(rng) < cfg.one_time_comer_rate;
  const double e = normal(rng);
  const double s = normal(rng);

  std::optional<int> conv_day;
  int churn_day = reg + 1;
  if (!one_timer) {
    if (cfg.pu_propensity > 0 && unit(rng) < sigmoid(intercept + converter_logit(e, s))) {
      const double scale = cfg.conversion_scale * std::exp(conversion_log_scale(e, s));
      const double delay =
          std::weibull_distribution<double>(cfg.conversion_shape, scale)(rng);
      conv_day = reg + 1 + static_cast<int>(std::min(delay, 1e6));
    }
    const double churn_delay = std::weibull_distribution<double>(
        cfg.churn_shape, cfg.churn_scale * std::exp(0.5 * e))(rng);
    churn_day = (conv_day ? *conv_day + 1 : reg + 2) +
                static_cast<int>(std::min(churn_delay, 1e6));
  }
  out.truth.true_converter = conv_day.has_value();
  out.truth.true_conversion_day = conv_day;
  out.truth.true_churn_day = churn_day;

  // Daily activity: log-normal playtime, sessions and actions driven by the
  // playtime and the spend trait, level gain proportional to playtime.
  const double active_prob = sigmoid(0.4 + 1.0 * e);
  const double playtime_mu = -0.2 + 0.45 * e + 0.15 * s;
  const double actions_rate = 12.0 * std::exp(0.6 * s);
  const double level_rate = 0.5 * std::exp(0.2 * e);
  std::lognormal_distribution<double> playtime(playtime_mu, 0.7);
  int level = 1;
  const int last = std::min(churn_day, window);
  for (int d = reg; d < last; ++d) {
    const bool forced = d == reg || d == churn_day - 1 || (conv_day && d == *conv_day);
    if (!forced && unit(rng) >= active_prob) continue;
    DailyActivity row;
    row.day_index = d;
    row.playtime_hours = std::round(playtime(rng) * 100.0) / 100.0;
    row.sessions = 1 + std::poisson_distribution<std::int64_t>(0.7 * row.playtime_hours)(rng);
    row.actions = std::poisson_distribution<std::int64_t>(
        static_cast<double>(row.sessions) * actions_rate * std::exp(0.2 * normal(rng)))(rng);
    if (d != reg) {
      level += static_cast<int>(
          std::poisson_distribution<int>(level_rate * row.playtime_hours)(rng));
    }
    row.level = level;
    if (conv_day && d == *conv_day) {
      row.purchases = 1 + std::poisson_distribution<std::int64_t>(0.3)(rng);
    } else if (conv_day && d > *conv_day) {
      row.purchases = unit(rng) < (s > 1.0 ? 0.18 : 0.08) ? 1 : 0;
    }
    out.log.rows.push_back(row);
  }
  return out;
}

}  // namespace

SyntheticData generate_synthetic(const GeneratorConfig& cfg) {
  if (cfg.n_players == 0) throw Error(ErrorKind::Config, "player count must be positive");
  if (cfg.observation_window_days < 2) {
    throw Error(ErrorKind::Config, "observation window must span at least two days");
  }
  if (!(cfg.pu_propensity >= 0.0 && cfg.pu_propensity < 1.0)) {
    throw Error(ErrorKind::Config, "pu propensity must lie in [0, 1)");
  }
  if (!(cfg.one_time_comer_rate >= 0.0 && cfg.one_time_comer_rate <= 1.0)) {
    throw Error(ErrorKind::Config, "one-time-comer rate must lie in [0, 1]");
  }
  if (!(cfg.conversion_shape > 0 && cfg.conversion_scale > 0 && cfg.churn_shape > 0 &&
        cfg.churn_scale > 0)) {
    throw Error(ErrorKind::Config, "Weibull shapes and scales must be positive");
  }

  SyntheticData out;
  out.converter_intercept = cfg.pu_propensity > 0 ? calibrate_intercept(cfg.pu_propensity)
                                                  : -INFINITY;
  out.logs.resize(cfg.n_players);
  out.truth.resize(cfg.n_players);
  parallel_for(cfg.n_players, resolve_threads(0), [&](std::size_t i) {
    auto draw = draw_player(cfg, out.converter_intercept, i);
    out.logs[i] = std::move(draw.log);
    out.truth[i] = std::move(draw.truth);
  });
  return out;
}

void write_ground_truth_csv(std::ostream& out, const std::vector<GroundTruth>& truth) {
  out << kTruthCsvHeader << '\n';
  for (const auto& t : truth) {
    out << t.player_id << ',' << (t.true_converter ? 1 : 0) << ',';
    if (t.true_conversion_day) out << *t.true_conversion_day;
    out << ',' << t.true_churn_day << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing ground-truth CSV");
}

std::vector<GroundTruth> read_ground_truth_csv(std::istream& in) {
  std::string line;
  std::vector<GroundTruth> out;
  if (!std::getline(in, line)) return out;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTruthCsvHeader) throw ParseError("line 1: unexpected ground-truth header", 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, conv, day, churn;
    if (!std::getline(ss, id, ',') || !std::getline(ss, conv, ',') ||
        !std::getline(ss, day, ',') || !std::getline(ss, churn)) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields", line_no);
    }
    GroundTruth t;
    t.player_id = id;
    try {
      t.true_converter = std::stoi(conv) != 0;
      if (!day.empty()) t.true_conversion_day = std::stoi(day);
      t.true_churn_day = std::stoi(churn);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid number", line_no);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace convsurv
