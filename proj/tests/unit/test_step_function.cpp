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

#include "convsurv/step_function.hpp"

using convsurv::StepFunctiond;
using V = Eigen::VectorXd;

namespace {

StepFunctiond make(std::initializer_list<double> knots, std::initializer_list<double> values,
                   double left) {
  V k(static_cast<Eigen::Index>(knots.size())), v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : knots) k[i++] = x;
  i = 0;
  for (const double x : values) v[i++] = x;
  return StepFunctiond(k, v, left);
}

}  // namespace

TEST_CASE("evaluate_step is right-continuous") {
  const auto f = make({1, 2}, {0.5, 0.25}, 1.0);
  CHECK(convsurv::evaluate_step(f, 0.5) == 1.0);
  CHECK(convsurv::evaluate_step(f, 1.0) == 0.5);
  CHECK(convsurv::evaluate_step(f, 10.0) == 0.25);
  CHECK(f(1.999) == 0.5);
  CHECK(f(2.0) == 0.25);
}

TEST_CASE("knot insertion with duplicated values changes no evaluation") {
  const auto f = make({1, 2}, {0.5, 0.25}, 1.0);
  const auto g = make({0.5, 1, 1.5, 2, 3}, {1.0, 0.5, 0.5, 0.25, 0.25}, 1.0);
  for (double t = -1; t < 5; t += 0.125) CHECK(f(t) == g(t));
}

TEST_CASE("step function rejects unsorted or mismatched knots") {
  CHECK_THROWS_AS(make({2, 1}, {0.5, 0.4}, 1.0), convsurv::Error);
  CHECK_THROWS_AS(make({1, 1}, {0.5, 0.4}, 1.0), convsurv::Error);
  CHECK_THROWS_AS(StepFunctiond(V::Zero(2), V::Zero(3), 1.0), convsurv::Error);
}

TEST_CASE("median_crossing") {
  CHECK(convsurv::median_crossing(make({3, 7}, {0.6, 0.4}, 1.0), 0.5) == 7.0);
  CHECK_FALSE(convsurv::median_crossing(make({3, 7}, {0.9, 0.8}, 1.0), 0.5).has_value());
  CHECK(convsurv::median_crossing(make({2, 5}, {0.3, 0.55}, 0.0), 0.5) == 5.0);
  // Exactly at the threshold counts as crossed.
  CHECK(convsurv::median_crossing(make({1, 2}, {0.5, 0.2}, 1.0), 0.5) == 1.0);

  SUBCASE("non-monotone input is rejected") {
    try {
      (void)convsurv::median_crossing(make({1, 2, 3}, {0.6, 0.7, 0.4}, 1.0), 0.5);
      FAIL("expected invalid curve");
    } catch (const convsurv::Error& e) {
      CHECK(e.kind() == convsurv::ErrorKind::InvalidCurve);
    }
  }
  SUBCASE("threshold must lie in (0, 1)") {
    CHECK_THROWS_AS(convsurv::median_crossing(make({1}, {0.4}, 1.0), 1.0), convsurv::Error);
  }
  SUBCASE("result is always a knot") {
    const auto f = make({0.5, 1.5, 4, 9}, {0.9, 0.7, 0.45, 0.1}, 1.0);
    for (double q : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      const auto m = convsurv::median_crossing(f, q);
      if (!m) continue;
      bool found = false;
      for (Eigen::Index i = 0; i < f.size(); ++i) found = found || f.knots()[i] == *m;
      CHECK(found);
    }
  }
}

TEST_CASE("survival_to_incidence") {
  const auto s = make({1, 2}, {0.75, 0.5}, 1.0);
  const auto f = convsurv::survival_to_incidence(s);
  CHECK(f.values()[0] == 0.25);
  CHECK(f.values()[1] == 0.5);
  CHECK(f.left_value() == 0.0);
  CHECK(convsurv::is_incidence_curve(f));

  const auto none = convsurv::survival_to_incidence(StepFunctiond::constant(1.0));
  CHECK(none(0.0) == 0.0);
  CHECK(none(1e9) == 0.0);

  const auto certain = convsurv::survival_to_incidence(make({1}, {0.0}, 1.0));
  CHECK(certain(1.0) == 1.0);
  CHECK(certain(0.5) == 0.0);

  CHECK(convsurv::survival_to_incidence(f) == s);
  CHECK_THROWS_AS(convsurv::survival_to_incidence(make({1, 2}, {0.5, 0.7}, 1.0)),
                  convsurv::Error);
  CHECK_THROWS_AS(convsurv::survival_to_incidence(make({1}, {1.5}, 1.0)), convsurv::Error);
}
