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

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "convsurv/error.hpp"

namespace convsurv {

/// Right-continuous piecewise-constant function of time.
///
/// f(t) is the value attached to the largest knot <= t, or `left_value()`
/// when t lies below the first knot. Survival curves, cumulative hazards and
/// cumulative incidence functions all share this representation.
template <typename Scalar>
class StepFunction {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  StepFunction() : left_value_(Scalar(0)) {}

  StepFunction(Vector knots, Vector values, Scalar left_value)
      : knots_(std::move(knots)),
        values_(std::move(values)),
        left_value_(left_value) {
    if (knots_.size() != values_.size()) {
      throw Error(ErrorKind::InvalidCurve,
                  "step function knots and values differ in length");
    }
    for (Eigen::Index i = 0; i < knots_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(knots_[i])) ||
          (i > 0 && !(knots_[i - 1] < knots_[i]))) {
        throw Error(ErrorKind::InvalidCurve,
                    "step function knots must be finite and strictly increasing");
      }
    }
  }

  static StepFunction constant(Scalar value) {
    return StepFunction(Vector(), Vector(), value);
  }

  const Vector& knots() const noexcept { return knots_; }
  const Vector& values() const noexcept { return values_; }
  Scalar left_value() const noexcept { return left_value_; }
  Eigen::Index size() const noexcept { return knots_.size(); }
  bool empty() const noexcept { return knots_.size() == 0; }

  Scalar operator()(Scalar t) const {
    const Scalar* begin = knots_.data();
    const Scalar* end = begin + knots_.size();
    const Scalar* it = std::upper_bound(begin, end, t);
    if (it == begin) return left_value_;
    return values_[(it - begin) - 1];
  }

  bool operator==(const StepFunction& other) const {
    return left_value_ == other.left_value_ && knots_ == other.knots_ &&
           values_ == other.values_;
  }

 private:
  Vector knots_;
  Vector values_;
  Scalar left_value_;
};

using StepFunctiond = StepFunction<double>;

template <typename Scalar>
Scalar evaluate_step(const StepFunction<Scalar>& f, Scalar t) {
  return f(t);
}

enum class Monotonicity { Constant, NonIncreasing, NonDecreasing, None };

template <typename Scalar>
Monotonicity monotonicity(const StepFunction<Scalar>& f) {
  bool up = false;
  bool down = false;
  Scalar prev = f.left_value();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Scalar v = f.values()[i];
    if (v > prev) up = true;
    if (v < prev) down = true;
    prev = v;
  }
  if (up && down) return Monotonicity::None;
  if (up) return Monotonicity::NonDecreasing;
  if (down) return Monotonicity::NonIncreasing;
  return Monotonicity::Constant;
}

template <typename Scalar>
bool is_survival_curve(const StepFunction<Scalar>& f) {
  const auto m = monotonicity(f);
  if (f.left_value() != Scalar(1)) return false;
  if (m != Monotonicity::NonIncreasing && m != Monotonicity::Constant) return false;
  return f.size() == 0 || (f.values().minCoeff() >= Scalar(0));
}

template <typename Scalar>
bool is_incidence_curve(const StepFunction<Scalar>& f) {
  const auto m = monotonicity(f);
  if (f.left_value() != Scalar(0)) return false;
  if (m != Monotonicity::NonDecreasing && m != Monotonicity::Constant) return false;
  return f.size() == 0 || (f.values().maxCoeff() <= Scalar(1));
}

/// First knot where a monotone curve reaches `threshold`: downward (value <=
/// threshold) for non-increasing curves, upward (value >= threshold) for
/// non-decreasing ones. A constant curve is read as a survival curve when its
/// value sits above the threshold and as an incidence curve otherwise.
template <typename Scalar>
std::optional<Scalar> median_crossing(const StepFunction<Scalar>& f,
                                      Scalar threshold = Scalar(0.5)) {
  if (!(threshold > Scalar(0) && threshold < Scalar(1))) {
    throw Error(ErrorKind::InvalidCurve, "crossing threshold must lie in (0,1)");
  }
  auto m = monotonicity(f);
  if (m == Monotonicity::None) {
    throw Error(ErrorKind::InvalidCurve, "median crossing needs a monotone curve");
  }
  if (m == Monotonicity::Constant) {
    m = f.left_value() > threshold ? Monotonicity::NonIncreasing
                                   : Monotonicity::NonDecreasing;
  }
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Scalar v = f.values()[i];
    const bool crossed = m == Monotonicity::NonIncreasing ? v <= threshold
                                                          : v >= threshold;
    if (crossed) return f.knots()[i];
  }
  return std::nullopt;
}

/// Pointwise complement 1 - S of a survival curve. The complement is an
/// involution, so a valid incidence curve maps back to its survival curve.
template <typename Scalar>
StepFunction<Scalar> survival_to_incidence(const StepFunction<Scalar>& f) {
  if (!is_survival_curve(f) && !is_incidence_curve(f)) {
    throw Error(ErrorKind::InvalidCurve, "input is not a valid survival curve");
  }
  typename StepFunction<Scalar>::Vector values =
      (Scalar(1) - f.values().array()).matrix();
  return StepFunction<Scalar>(f.knots(), std::move(values),
                              Scalar(1) - f.left_value());
}

template <typename Scalar>
StepFunction<Scalar> incidence_to_survival(const StepFunction<Scalar>& f) {
  return survival_to_incidence(f);
}

}  // namespace convsurv
