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

#include "convsurv/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "convsurv/parallel.hpp"

namespace convsurv {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_number(std::string_view field, std::string_view column, std::size_t line) {
  T value{};
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": invalid " +
                         std::string(column) + " '" + std::string(field) + "'",
                     line);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw ParseError("line " + std::to_string(line) + ": non-finite " +
                           std::string(column),
                       line);
    }
  }
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename T>
void append_number(std::string& out, T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, ptr);
}

}  // namespace

std::vector<PlayerLog> ingest_logs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return ingest_logs(in);
}

std::vector<PlayerLog> ingest_logs(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  strip_cr(line);
  if (line != kLogCsvHeader) {
    throw ParseError("line 1: expected header '" + std::string(kLogCsvHeader) + "'", 1);
  }

  std::map<std::string, PlayerLog, std::less<>> players;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 7) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 7 fields, got " +
                           std::to_string(f.size()),
                       line_no);
    }
    if (f[0].empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty player_id", line_no);
    }
    DailyActivity row;
    row.day_index = parse_number<int>(f[1], "day_index", line_no);
    row.playtime_hours = parse_number<double>(f[2], "playtime_hours", line_no);
    row.level = parse_number<int>(f[3], "level", line_no);
    row.sessions = parse_number<std::int64_t>(f[4], "sessions", line_no);
    row.actions = parse_number<std::int64_t>(f[5], "actions", line_no);
    row.purchases = parse_number<std::int64_t>(f[6], "purchases", line_no);
    if (row.playtime_hours < 0 || row.level < 1 || row.sessions < 0 || row.actions < 0 ||
        row.purchases < 0) {
      throw ParseError("line " + std::to_string(line_no) +
                           ": negative count or level below 1",
                       line_no);
    }
    auto it = players.find(f[0]);
    if (it == players.end()) {
      it = players.emplace(std::string(f[0]), PlayerLog{}).first;
      it->second.player_id = it->first;
    }
    it->second.rows.push_back(row);
  }

  std::vector<PlayerLog> logs;
  logs.reserve(players.size());
  for (auto& [id, log] : players) {
    std::stable_sort(log.rows.begin(), log.rows.end(),
                     [](const auto& a, const auto& b) { return a.day_index < b.day_index; });
    for (std::size_t i = 1; i < log.rows.size(); ++i) {
      if (log.rows[i].day_index == log.rows[i - 1].day_index) {
        throw Error(ErrorKind::Validation,
                    "player " + id + ": duplicate day " +
                        std::to_string(log.rows[i].day_index));
      }
      if (log.rows[i].level < log.rows[i - 1].level) {
        throw Error(ErrorKind::Validation,
                    "player " + id + ": level decreases on day " +
                        std::to_string(log.rows[i].day_index));
      }
    }
    log.registration_day = log.rows.front().day_index;
    logs.push_back(std::move(log));
  }
  return logs;
}

void write_logs_csv(std::ostream& out, const std::vector<PlayerLog>& logs) {
  std::string buf;
  buf.append(kLogCsvHeader).push_back('\n');
  for (const auto& log : logs) {
    for (const auto& r : log.rows) {
      buf += log.player_id;
      buf.push_back(',');
      append_number(buf, r.day_index);
      buf.push_back(',');
      append_number(buf, r.playtime_hours);
      buf.push_back(',');
      append_number(buf, r.level);
      buf.push_back(',');
      append_number(buf, r.sessions);
      buf.push_back(',');
      append_number(buf, r.actions);
      buf.push_back(',');
      append_number(buf, r.purchases);
      buf.push_back('\n');
    }
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw Error(ErrorKind::Io, "failed writing activity CSV");
}

std::vector<PlayerLog> filter_newcomers(std::vector<PlayerLog> logs) {
  std::erase_if(logs, [](const PlayerLog& log) {
    if (log.rows.size() < 2) return true;
    return std::all_of(log.rows.begin(), log.rows.end(), [&](const DailyActivity& r) {
      return r.day_index == log.rows.front().day_index;
    });
  });
  return logs;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "playtime_mean",  "playtime_max",     "playtime_std",
      "sessions_total", "actions_per_session", "active_day_ratio",
      "current_level",  "level_velocity",   "days_since_registration"};
  return names;
}

std::string feature_spec_hash() {
  std::string joined = "features/v1";
  for (const auto& n : feature_names()) joined += ";" + n;
  char buf[17];
  const auto [ptr, ec] = std::to_chars(buf, buf + 16, fnv1a(joined), 16);
  return "fnv1a:" + std::string(buf, ptr);
}

FeatureVector engineer_features(const PlayerLog& log, int cutoff_day) {
  FeatureVector out{Eigen::VectorXd::Zero(9), false};
  std::size_t n = 0;
  while (n < log.rows.size() && log.rows[n].day_index < cutoff_day) ++n;
  if (n == 0) {
    out.defaulted = true;
    return out;
  }

  double sum = 0, max = 0;
  std::int64_t sessions = 0, actions = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = log.rows[i];
    sum += r.playtime_hours;
    max = std::max(max, r.playtime_hours);
    sessions += r.sessions;
    actions += r.actions;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = log.rows[i].playtime_hours - mean;
    ss += d * d;
  }
  const auto& last = log.rows[n - 1];
  const double elapsed = static_cast<double>(cutoff_day - log.registration_day);

  out.values << mean, max, n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0,
      static_cast<double>(sessions),
      sessions > 0 ? static_cast<double>(actions) / static_cast<double>(sessions) : 0.0,
      static_cast<double>(n) / elapsed, static_cast<double>(last.level),
      static_cast<double>(last.level - log.rows.front().level) / static_cast<double>(n),
      static_cast<double>(last.day_index - log.registration_day);
  return out;
}

double PlayerOutcome::time_on(TimeAxis axis) const {
  switch (axis) {
    case TimeAxis::Lifetime: return lifetime;
    case TimeAxis::Level: return level;
    case TimeAxis::Playtime: return playtime;
  }
  return lifetime;
}

PlayerOutcome player_outcome(const PlayerLog& log, bool competing, int churn_window,
                             int data_end) {
  if (log.rows.empty()) {
    throw Error(ErrorKind::Validation, "player " + log.player_id + " has no activity");
  }
  auto event = std::find_if(log.rows.begin(), log.rows.end(),
                            [](const DailyActivity& r) { return r.purchases > 0; });
  PlayerOutcome out;
  if (event != log.rows.end()) {
    out.status = EventStatus::Converted;
  } else {
    event = log.rows.end() - 1;
    out.status = competing && data_end - event->day_index >= churn_window
                     ? EventStatus::Churned
                     : EventStatus::Censored;
  }
  out.event_day = event->day_index;
  out.lifetime = static_cast<double>(event->day_index - log.registration_day);
  out.level = static_cast<double>(event->level);
  for (auto it = log.rows.begin(); it != event + 1; ++it) out.playtime += it->playtime_hours;
  return out;
}

int latest_day(const std::vector<PlayerLog>& logs) {
  int last = 0;
  for (const auto& log : logs) {
    if (!log.rows.empty()) last = std::max(last, log.rows.back().day_index);
  }
  return last;
}

SurvivalDataset build_dataset(const std::vector<PlayerLog>& logs, TimeAxis axis,
                              bool competing, const FeatureSpec& spec) {
  if (spec.churn_window < 1) {
    throw Error(ErrorKind::Config, "churn window must be at least one day");
  }
  const int data_end = spec.data_end.value_or(latest_day(logs));
  std::vector<SurvivalRecord> records(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto outcome = player_outcome(logs[i], competing, spec.churn_window, data_end);
    records[i] = SurvivalRecord{logs[i].player_id, outcome.time_on(axis), outcome.status,
                                engineer_features(logs[i], outcome.event_day).values};
  }
  return SurvivalDataset(std::move(records), feature_names(), axis, competing);
}

}  // namespace convsurv
