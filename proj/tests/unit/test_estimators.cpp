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

#include <algorithm>
#include <random>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "convsurv/estimators.hpp"

using convsurv::EventStatus;
using fixtures::dataset;

namespace {

constexpr auto C = EventStatus::Converted;
constexpr auto X = EventStatus::Censored;
constexpr auto K = EventStatus::Churned;

std::vector<double> values(const convsurv::StepFunctiond& f) {
  return {f.values().data(), f.values().data() + f.size()};
}

}  // namespace

TEST_CASE("risk_table hand counts") {
  const auto t = convsurv::risk_table(dataset({{1, C}, {2, X}, {3, C}}));
  REQUIRE(t.size() == 2);
  CHECK(t.event_times[0] == 1);
  CHECK(t.event_times[1] == 3);
  CHECK(t.at_risk == std::vector<std::int64_t>{3, 1});
  CHECK(t.converted == std::vector<std::int64_t>{1, 1});
  CHECK(t.censored == std::vector<std::int64_t>{1, 0});

  CHECK(convsurv::risk_table(dataset({{1, X}, {4, X}})).size() == 0);

  const auto tied = convsurv::risk_table(dataset({{2, C}, {2, C}, {2, C}}));
  REQUIRE(tied.size() == 1);
  CHECK(tied.at_risk[0] == 3);
  CHECK(tied.converted[0] == 3);

  CHECK_THROWS_AS(convsurv::risk_table(dataset({})), convsurv::Error);
}

TEST_CASE("risk_table totals match the record count") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = oracle::random_dataset(rng, 1 + rep % 20, rep % 2 == 0);
    const auto t = convsurv::risk_table(d);
    std::int64_t total = t.censored_before_first;
    for (std::size_t k = 0; k < t.size(); ++k) {
      total += t.events(k) + t.censored[k];
      CHECK(t.events(k) <= t.at_risk[k]);
      if (k > 0) CHECK(t.at_risk[k] <= t.at_risk[k - 1]);
    }
    CHECK(total == static_cast<std::int64_t>(d.size()));
  }
}

TEST_CASE("kaplan_meier examples") {
  const auto empirical = values(convsurv::kaplan_meier(dataset({{1, C}, {2, C}, {3, C}})));
  REQUIRE(empirical.size() == 3);
  CHECK(empirical[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(empirical[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(empirical[2] == 0.0);
  const auto s = convsurv::kaplan_meier(dataset({{1, C}, {2, X}, {3, C}}));
  CHECK(s(1) == doctest::Approx(2.0 / 3));
  CHECK(s(3) == 0.0);
  const auto flat = convsurv::kaplan_meier(dataset({{1, X}, {2, X}}));
  CHECK(flat.empty());
  CHECK(flat(5) == 1.0);

  try {
    (void)convsurv::kaplan_meier(dataset({{1, C}, {2, K}}, true));
    FAIL("expected wrong-estimator error");
  } catch (const convsurv::Error& e) {
    CHECK(e.kind() == convsurv::ErrorKind::WrongEstimator);
  }
}

TEST_CASE("nelson_aalen examples") {
  const auto h = convsurv::nelson_aalen(dataset({{1, C}, {2, C}, {3, C}}));
  CHECK(h(1) == doctest::Approx(1.0 / 3));
  CHECK(h(2) == doctest::Approx(1.0 / 3 + 1.0 / 2));
  CHECK(h(3) == doctest::Approx(1.0 / 3 + 1.0 / 2 + 1.0));
  CHECK(convsurv::nelson_aalen(dataset({{1, X}})).empty());
  const auto g = convsurv::nelson_aalen(dataset({{1, C}, {2, X}, {3, C}}));
  CHECK(g(1) == doctest::Approx(1.0 / 3));
  CHECK(g(3) == doctest::Approx(4.0 / 3));
}

TEST_CASE("aalen_johansen examples") {
  const auto d = dataset({{1, C}, {2, K}, {3, X}}, true);
  CHECK(convsurv::aalen_johansen(d, C)(100) == doctest::Approx(1.0 / 3));
  CHECK(convsurv::aalen_johansen(d, K)(100) == doctest::Approx(1.0 / 3));

  const auto no_churn = dataset({{1, C}, {2, X}, {2, C}, {4, C}, {5, X}}, true);
  const auto cif = convsurv::aalen_johansen(no_churn, C);
  const auto km = convsurv::kaplan_meier(no_churn.as_single_risk());
  for (double t = 0; t < 6; t += 0.5) CHECK(cif(t) == doctest::Approx(1 - km(t)).epsilon(1e-14));

  const auto censored = dataset({{1, X}, {2, X}}, true);
  CHECK(convsurv::aalen_johansen(censored, C)(10) == 0.0);
  CHECK(convsurv::aalen_johansen(censored, K)(10) == 0.0);

  try {
    (void)convsurv::aalen_johansen(d, X);
    FAIL("expected invalid-event error");
  } catch (const convsurv::Error& e) {
    CHECK(e.kind() == convsurv::ErrorKind::InvalidEvent);
  }
}

TEST_CASE("estimators are permutation invariant and NA dominates KM") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 40; ++rep) {
    const auto d = oracle::random_dataset(rng, 12, false);
    auto rec = d.records();
    std::shuffle(rec.begin(), rec.end(), rng);
    const convsurv::SurvivalDataset p(rec, d.feature_names(), d.axis(), false);
    CHECK(convsurv::kaplan_meier(d) == convsurv::kaplan_meier(p));
    CHECK(convsurv::nelson_aalen(d) == convsurv::nelson_aalen(p));
    const auto km = convsurv::kaplan_meier(d);
    const auto na = convsurv::nelson_aalen(d);
    for (Eigen::Index k = 0; k < km.size(); ++k) {
      CHECK(std::exp(-na.values()[k]) >= km.values()[k] - 1e-15);
    }
  }
}

TEST_CASE("kaplan_meier without censoring is the empirical survival") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> t(1, 6);
  std::vector<fixtures::Row> rows;
  for (int i = 0; i < 17; ++i) rows.push_back({double(t(rng)), C});
  const auto km = convsurv::kaplan_meier(dataset(rows));
  for (double u = 0; u <= 7; u += 0.5) {
    const double above = std::count_if(rows.begin(), rows.end(),
                                       [&](const auto& r) { return r.time > u; });
    CHECK(km(u) == doctest::Approx(above / rows.size()).epsilon(1e-14));
  }
}

TEST_CASE("km_confidence_band") {
  std::mt19937_64 rng(3);
  const auto d = oracle::random_dataset(rng, 20, false);
  const auto km = convsurv::kaplan_meier(d);
  const auto b95 = convsurv::km_confidence_band(d, 0.95);
  const auto b90 = convsurv::km_confidence_band(d, 0.90);
  const auto b99 = convsurv::km_confidence_band(d, 0.99);
  for (double t = 0; t < 10; t += 0.5) {
    CHECK(b95.lower(t) <= km(t));
    CHECK(km(t) <= b95.upper(t));
    CHECK(b99.upper(t) - b99.lower(t) >= b90.upper(t) - b90.lower(t));
    CHECK(b95.lower(t) >= 0.0);
    CHECK(b95.upper(t) <= 1.0);
  }

  const auto single = convsurv::km_confidence_band(dataset({{4, C}}), 0.95);
  CHECK(single.lower(4) == 0.0);

  CHECK_THROWS_AS(convsurv::km_confidence_band(dataset({}), 0.95), convsurv::Error);
  CHECK_THROWS_AS(convsurv::km_confidence_band(d, 1.0), convsurv::Error);
}
