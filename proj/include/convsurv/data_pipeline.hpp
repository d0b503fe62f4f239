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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "convsurv/survival_core.hpp"

namespace convsurv {

/// One row of the raw activity CSV; days are absolute day indices.
struct DailyActivity {
  int day_index = 0;
  double playtime_hours = 0.0;
  int level = 1;
  std::int64_t sessions = 0;
  std::int64_t actions = 0;
  std::int64_t purchases = 0;
};

/// Activity history of one player. Rows are sorted by day, one per active
/// day, with non-decreasing level; the first row is the registration day.
struct PlayerLog {
  std::string player_id;
  int registration_day = 0;
  std::vector<DailyActivity> rows;
};

inline constexpr std::string_view kLogCsvHeader =
    "player_id,day_index,playtime_hours,level,sessions,actions,purchases";

/// Parses the activity CSV. Players are returned sorted by id; a player's
/// rows may appear in any order in the file.
std::vector<PlayerLog> ingest_logs(const std::filesystem::path& path);
std::vector<PlayerLog> ingest_logs(std::istream& in);

void write_logs_csv(std::ostream& out, const std::vector<PlayerLog>& logs);

/// Keeps players active on at least two distinct days.
std::vector<PlayerLog> filter_newcomers(std::vector<PlayerLog> logs);

struct FeatureSpec {
  int churn_window = 9;
  /// Last day of the observation window; defaults to the latest day in the logs.
  std::optional<int> data_end;
};

/// Frozen feature set, identical on every axis:
///   playtime_mean, playtime_max, playtime_std   daily playtime over the window
///   sessions_total                              summed sessions
///   actions_per_session                         total actions / total sessions
///   active_day_ratio                            active days / elapsed days
///   current_level                               level on the last window day
///   level_velocity                              (last - first level) / active days
///   days_since_registration                     last window day - registration
/// The window is every row strictly before the cutoff day. Standard deviation
/// is 0 below two rows; an empty window yields the all-zero vector.
const std::vector<std::string>& feature_names();

/// Stable identifier of the feature set, stored in model files.
std::string feature_spec_hash();

struct FeatureVector {
  Eigen::VectorXd values;
  bool defaulted = false;  // empty window
};

FeatureVector engineer_features(const PlayerLog& log, int cutoff_day);

/// Event or censoring outcome of one player, on all three axes.
struct PlayerOutcome {
  EventStatus status = EventStatus::Censored;
  int event_day = 0;  // absolute day of the event or censoring
  double lifetime = 0.0;
  double level = 0.0;
  double playtime = 0.0;

  double time_on(TimeAxis axis) const;
};

PlayerOutcome player_outcome(const PlayerLog& log, bool competing, int churn_window,
                             int data_end);

int latest_day(const std::vector<PlayerLog>& logs);

/// One record per player: conversion at the first purchase day; otherwise
/// churned (competing only, inactive for >= churn_window days before the data
/// end) or censored at the last active day. Features use rows before that day.
SurvivalDataset build_dataset(const std::vector<PlayerLog>& logs, TimeAxis axis,
                              bool competing, const FeatureSpec& spec = {});

// ---------------------------------------------------------------------------
// Synthetic players

struct GeneratorConfig {
  std::size_t n_players = 20000;
  double pu_propensity = 0.053;  // converter share among returning players
  int observation_window_days = 120;
  double one_time_comer_rate = 0.3;
  std::uint64_t seed = 0;
  // Conversion delay ~ Weibull(shape, scale(engagement, spend)) in days.
  double conversion_shape = 1.3;
  double conversion_scale = 10.0;
  // Churn delay ~ Weibull(shape, scale(engagement)) in days.
  double churn_shape = 1.5;
  double churn_scale = 120.0;
};

struct GroundTruth {
  std::string player_id;
  bool true_converter = false;
  std::optional<int> true_conversion_day;  // absolute day; may exceed the window
  int true_churn_day = 0;                  // first absolute day without activity
};

struct SyntheticData {
  std::vector<PlayerLog> logs;
  std::vector<GroundTruth> truth;
  double converter_intercept = 0.0;  // calibrated logit offset a
};

/// Latent engagement e and spend s are standard normal per player. Returning
/// players convert with probability sigmoid(a + 2.2 s + 0.6 e + 1.2 [e > 0.5][s > 0]),
/// with a calibrated so that the mean equals `pu_propensity`. The conversion
/// scale is 10 * exp(-0.5 e - 0.4 s - 0.6 e s [e > 0] + 0.7 [e < -0.5]) days,
/// so the log-hazard is neither linear nor additive in the latent traits.
SyntheticData generate_synthetic(const GeneratorConfig& cfg);

inline constexpr std::string_view kTruthCsvHeader =
    "player_id,true_converter,true_conversion_day,true_churn_day";

void write_ground_truth_csv(std::ostream& out, const std::vector<GroundTruth>& truth);
std::vector<GroundTruth> read_ground_truth_csv(std::istream& in);

}  // namespace convsurv
