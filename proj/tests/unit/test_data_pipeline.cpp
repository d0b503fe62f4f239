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

#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "convsurv/data_pipeline.hpp"

using convsurv::EventStatus;
using convsurv::PlayerLog;
using convsurv::TimeAxis;

namespace {

std::vector<PlayerLog> parse(const std::string& body) {
  std::istringstream in(std::string(convsurv::kLogCsvHeader) + "\n" + body);
  return convsurv::ingest_logs(in);
}

PlayerLog daily(const std::string& id, int reg, std::initializer_list<convsurv::DailyActivity> rows) {
  PlayerLog log{id, reg, rows};
  return log;
}

}  // namespace

TEST_CASE("ingest_logs") {
  const auto logs = parse(
      "p1,2,1.5,2,1,10,0\n"
      "p1,0,1.0,1,2,20,0\n"
      "p1,1,0.5,1,1,5,1\n");
  REQUIRE(logs.size() == 1);
  CHECK(logs[0].player_id == "p1");
  CHECK(logs[0].registration_day == 0);
  REQUIRE(logs[0].rows.size() == 3);
  CHECK(logs[0].rows[1].day_index == 1);
  CHECK(logs[0].rows[1].purchases == 1);

  CHECK(parse("").empty());

  try {
    (void)parse("p1,0,1.0,3,1,1,0\np1,1,1.0,2,1,1,0\n");
    FAIL("expected validation error");
  } catch (const convsurv::Error& e) {
    CHECK(e.kind() == convsurv::ErrorKind::Validation);
    CHECK(std::string(e.what()).find("p1") != std::string::npos);
  }

  try {
    (void)parse("p1,0,1.0,1,1,1,0\np2,x,1.0,1,1,1,0\n");
    FAIL("expected parse error");
  } catch (const convsurv::ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse("p1,0,1.0,1,1\n"), convsurv::ParseError);
  CHECK_THROWS_AS(parse("p1,0,-1.0,1,1,1,0\n"), convsurv::ParseError);
  CHECK_THROWS_AS(parse("p1,0,1.0,1,1,1,0\np1,0,2.0,1,1,1,0\n"), convsurv::Error);

  std::istringstream bad_header("id,day\n");
  CHECK_THROWS_AS(convsurv::ingest_logs(bad_header), convsurv::ParseError);
}

TEST_CASE("CSV round trip") {
  const auto logs = parse("a,3,0.25,1,1,3,0\na,5,2,4,3,40,2\nb,0,1,1,1,1,0\n");
  std::ostringstream out;
  convsurv::write_logs_csv(out, logs);
  std::istringstream in(out.str());
  const auto again = convsurv::ingest_logs(in);
  REQUIRE(again.size() == 2);
  CHECK(again[0].rows[1].playtime_hours == 2.0);
  CHECK(again[0].rows[1].purchases == 2);
  std::ostringstream out2;
  convsurv::write_logs_csv(out2, again);
  CHECK(out.str() == out2.str());
}

TEST_CASE("filter_newcomers") {
  std::vector<PlayerLog> logs = {daily("one", 0, {{0, 1.0, 1, 1, 1, 0}}),
                                 daily("two", 0, {{0, 1.0, 1, 1, 1, 0}, {5, 1.0, 1, 1, 1, 0}})};
  const auto kept = convsurv::filter_newcomers(logs);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].player_id == "two");
  CHECK(convsurv::filter_newcomers({}).empty());
}

TEST_CASE("build_dataset hand trace of a converter") {
  // Days 0..7, purchase on day 7; playtime through day 7 sums to 4.5 h, level 12 that day.
  const auto log = daily("c", 0, {{0, 1.0, 1, 1, 10, 0},
                                  {2, 0.5, 4, 1, 5, 0},
                                  {3, 1.5, 7, 2, 20, 0},
                                  {6, 0.5, 10, 1, 6, 0},
                                  {7, 1.0, 12, 1, 9, 1},
                                  {9, 3.0, 15, 2, 30, 1}});
  const std::vector<PlayerLog> logs = {log};
  for (const auto axis : {TimeAxis::Lifetime, TimeAxis::Level, TimeAxis::Playtime}) {
    const auto d = convsurv::build_dataset(logs, axis, false);
    REQUIRE(d.size() == 1);
    CHECK(d[0].status == EventStatus::Converted);
  }
  CHECK(convsurv::build_dataset(logs, TimeAxis::Lifetime, false)[0].time == 7.0);
  CHECK(convsurv::build_dataset(logs, TimeAxis::Level, false)[0].time == 12.0);
  CHECK(convsurv::build_dataset(logs, TimeAxis::Playtime, false)[0].time == 4.5);

  const auto out = convsurv::player_outcome(log, true, 9, 30);
  CHECK(out.event_day == 7);
  CHECK(out.level == 12.0);
}

TEST_CASE("censored and churned non-converters") {
  const auto active = daily("a", 0, {{0, 1.0, 1, 1, 1, 0}, {18, 2.0, 3, 1, 1, 0}});
  const auto gone = daily("g", 2, {{2, 1.0, 1, 1, 1, 0}, {5, 2.0, 2, 1, 1, 0}});
  const std::vector<PlayerLog> logs = {active, gone};
  convsurv::FeatureSpec spec;
  spec.data_end = 20;

  const auto single = convsurv::build_dataset(logs, TimeAxis::Lifetime, false, spec);
  CHECK(single[0].status == EventStatus::Censored);
  CHECK(single[1].status == EventStatus::Censored);
  CHECK(single[0].time == 18.0);
  CHECK(single[1].time == 3.0);

  const auto competing = convsurv::build_dataset(logs, TimeAxis::Level, true, spec);
  CHECK(competing.competing_risks());
  CHECK(competing[0].status == EventStatus::Censored);
  CHECK(competing[1].status == EventStatus::Churned);
  CHECK(competing[1].time == 2.0);
  CHECK(convsurv::build_dataset(logs, TimeAxis::Playtime, true, spec)[1].time == 3.0);
}

TEST_CASE("engineer_features") {
  PlayerLog log{"f", 0, {}};
  for (int d = 0; d < 5; ++d) log.rows.push_back({d, 1.0, 1 + d, 2, 8, 0});
  log.rows.push_back({5, 9.0, 9, 1, 1, 1});
  const auto& names = convsurv::feature_names();
  REQUIRE(names.size() == 9);
  auto at = [&](const convsurv::FeatureVector& f, const std::string& name) {
    const auto j = std::find(names.begin(), names.end(), name) - names.begin();
    return f.values[j];
  };
  const auto f = convsurv::engineer_features(log, 5);
  CHECK_FALSE(f.defaulted);
  CHECK(at(f, "playtime_mean") == 1.0);
  CHECK(at(f, "playtime_max") == 1.0);
  CHECK(at(f, "playtime_std") == 0.0);
  CHECK(at(f, "active_day_ratio") == 1.0);
  CHECK(at(f, "sessions_total") == 10.0);
  CHECK(at(f, "actions_per_session") == 4.0);
  CHECK(at(f, "current_level") == 5.0);
  CHECK(at(f, "level_velocity") == doctest::Approx(4.0 / 5.0));
  CHECK(at(f, "days_since_registration") == 4.0);

  const auto one = convsurv::engineer_features(log, 1);
  CHECK(at(one, "playtime_std") == 0.0);
  CHECK_FALSE(one.defaulted);

  const auto empty = convsurv::engineer_features(log, 0);
  CHECK(empty.defaulted);
  CHECK(empty.values.isZero());

  CHECK(convsurv::feature_spec_hash().rfind("fnv1a:", 0) == 0);
}

TEST_CASE("features ignore rows at or after the event day") {
  const auto data = convsurv::generate_synthetic({.n_players = 400, .seed = 12});
  const auto logs = convsurv::filter_newcomers(data.logs);
  const int end = convsurv::latest_day(logs);
  for (const auto& log : logs) {
    const auto out = convsurv::player_outcome(log, true, 9, end);
    PlayerLog cut = log;
    std::erase_if(cut.rows, [&](const auto& r) { return r.day_index >= out.event_day; });
    const auto a = convsurv::engineer_features(log, out.event_day);
    const auto b = convsurv::engineer_features(cut, out.event_day);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("status does not depend on the axis and level matches the event row") {
  const auto data = convsurv::generate_synthetic({.n_players = 600, .seed = 3});
  const auto logs = convsurv::filter_newcomers(data.logs);
  const auto a = convsurv::build_dataset(logs, TimeAxis::Lifetime, true);
  const auto b = convsurv::build_dataset(logs, TimeAxis::Level, true);
  const auto c = convsurv::build_dataset(logs, TimeAxis::Playtime, true);
  REQUIRE(a.size() == logs.size());
  const int end = convsurv::latest_day(logs);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].status == b[i].status);
    CHECK(a[i].status == c[i].status);
    const auto out = convsurv::player_outcome(logs[i], true, 9, end);
    const auto row = std::find_if(logs[i].rows.begin(), logs[i].rows.end(),
                                  [&](const auto& r) { return r.day_index == out.event_day; });
    REQUIRE(row != logs[i].rows.end());
    CHECK(b[i].time == row->level);
  }
}

TEST_CASE("generator calibration and determinism") {
  const auto data = convsurv::generate_synthetic({.n_players = 20000, .seed = 1});
  REQUIRE(data.logs.size() == 20000);
  std::size_t single_day = 0, returning = 0, converters = 0;
  for (std::size_t i = 0; i < data.logs.size(); ++i) {
    if (data.logs[i].rows.size() < 2) {
      ++single_day;
      continue;
    }
    ++returning;
    converters += data.truth[i].true_converter ? 1 : 0;
  }
  const double share = double(converters) / double(returning);
  CHECK(std::abs(share - 0.053) <= 0.005);
  CHECK(std::abs(double(single_day) / 20000.0 - 0.3) <= 0.02);

  const auto again = convsurv::generate_synthetic({.n_players = 20000, .seed = 1});
  std::ostringstream x, y;
  convsurv::write_logs_csv(x, data.logs);
  convsurv::write_logs_csv(y, again.logs);
  CHECK(x.str() == y.str());

  const auto none = convsurv::generate_synthetic({.n_players = 2000, .pu_propensity = 0.0});
  for (const auto& t : none.truth) CHECK_FALSE(t.true_converter);

  CHECK_THROWS_AS(convsurv::generate_synthetic({.observation_window_days = 0}), convsurv::Error);
  CHECK_THROWS_AS(convsurv::generate_synthetic({.pu_propensity = 1.5}), convsurv::Error);
}

TEST_CASE("ground truth agrees with reconstructed labels") {
  const auto data = convsurv::generate_synthetic({.n_players = 3000, .seed = 8});
  std::map<std::string, const convsurv::GroundTruth*> truth;
  for (const auto& t : data.truth) truth[t.player_id] = &t;
  const auto logs = convsurv::filter_newcomers(data.logs);
  const auto d = convsurv::build_dataset(logs, TimeAxis::Lifetime, false);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& t = *truth.at(logs[i].player_id);
    if (d[i].status == EventStatus::Converted) {
      REQUIRE(t.true_conversion_day.has_value());
      CHECK(d[i].time == double(*t.true_conversion_day - logs[i].registration_day));
    } else if (t.true_conversion_day) {
      // A converter is censored only when the purchase lies beyond the window.
      CHECK(*t.true_conversion_day >= 120);
    }
  }

  std::ostringstream out;
  convsurv::write_ground_truth_csv(out, data.truth);
  std::istringstream in(out.str());
  const auto back = convsurv::read_ground_truth_csv(in);
  REQUIRE(back.size() == data.truth.size());
  CHECK(back[5].true_churn_day == data.truth[5].true_churn_day);
  CHECK(back[5].true_conversion_day == data.truth[5].true_conversion_day);
}
