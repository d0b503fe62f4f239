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
#include <cstdint>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "convsurv/step_function.hpp"
#include "convsurv/survival_core.hpp"

namespace convsurv {

/// Breslow-tie log partial likelihood of the proportional-hazards model,
/// with an optional ridge term -ridge/2 * |beta|^2.
///
/// Subjects are grouped by distinct observed time; each event group shares
/// the risk set {j : T_j >= t}. Sums are accumulated from the latest time
/// backwards and exponentials are shifted by max(X beta).
template <typename Scalar>
class CoxPartialLikelihood {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Derivatives {
    Scalar value;
    Vector gradient;
    Matrix hessian;
  };

  CoxPartialLikelihood(Matrix x, std::span<const double> times,
                       std::span<const std::uint8_t> events)
      : x_(std::move(x)) {
    const auto n = static_cast<std::size_t>(x_.rows());
    if (times.size() != n || events.size() != n) {
      throw Error(ErrorKind::Shape, "partial likelihood inputs differ in length");
    }
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });
    event_.assign(events.begin(), events.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && times[order_[j]] == times[order_[i]]) ++j;
      group_end_.push_back(j);
      i = j;
    }
  }

  Eigen::Index dimension() const noexcept { return x_.cols(); }
  const Matrix& design() const noexcept { return x_; }

  Scalar value(const Vector& beta, Scalar ridge = Scalar(0)) const {
    return evaluate(beta, ridge, false).value;
  }

  Derivatives derivatives(const Vector& beta, Scalar ridge = Scalar(0)) const {
    return evaluate(beta, ridge, true);
  }

 private:
  Derivatives evaluate(const Vector& beta, Scalar ridge, bool second_order) const {
    using std::exp;
    using std::log;
    const Eigen::Index p = x_.cols();
    const Vector eta = x_ * beta;
    const Scalar shift = eta.size() > 0 ? eta.maxCoeff() : Scalar(0);

    Scalar s0(0);
    Vector s1 = Vector::Zero(p);
    Matrix s2 = second_order ? Matrix::Zero(p, p) : Matrix();

    Derivatives out{Scalar(0), Vector::Zero(p), second_order ? Matrix::Zero(p, p) : Matrix()};
    std::size_t begin = 0;
    for (const std::size_t end : group_end_) {
      for (std::size_t k = begin; k < end; ++k) {
        const auto i = static_cast<Eigen::Index>(order_[k]);
        const Scalar w = exp(eta[i] - shift);
        s0 += w;
        s1.noalias() += w * x_.row(i).transpose();
        if (second_order) s2.noalias() += w * x_.row(i).transpose() * x_.row(i);
      }
      Scalar d(0);
      for (std::size_t k = begin; k < end; ++k) {
        const auto i = static_cast<Eigen::Index>(order_[k]);
        if (!event_[order_[k]]) continue;
        d += Scalar(1);
        out.value += eta[i];
        out.gradient.noalias() += x_.row(i).transpose();
      }
      if (d > Scalar(0)) {
        out.value -= d * (log(s0) + shift);
        const Vector mean = s1 / s0;
        out.gradient.noalias() -= d * mean;
        if (second_order) {
          out.hessian.noalias() -= d * (s2 / s0 - mean * mean.transpose());
        }
      }
      begin = end;
    }
    if (ridge != Scalar(0)) {
      out.value -= ridge / Scalar(2) * beta.squaredNorm();
      out.gradient.noalias() -= ridge * beta;
      if (second_order) out.hessian.diagonal().array() -= ridge;
    }
    return out;
  }

  Matrix x_;
  std::vector<std::size_t> order_;
  std::vector<std::uint8_t> event_;
  std::vector<std::size_t> group_end_;
};

struct CoxOptions {
  int max_iter = 100;
  double tol = 1e-8;
  double ridge = 1e-6;
};

struct CoxConvergence {
  int iterations = 0;
  double gradient_norm = 0.0;
  double log_partial_likelihood = 0.0;
};

/// Fitted proportional-hazards model. `baseline_cum_hazard` is the Breslow
/// cumulative hazard of a subject with x = 0.
struct CoxFit {
  Eigen::VectorXd beta;
  StepFunctiond baseline_cum_hazard;
  std::vector<std::string> feature_names;
  CoxConvergence convergence;
};

/// Coefficient magnitude beyond which the likelihood is treated as monotone.
inline constexpr double kCoxSeparationGuard = 50.0;

CoxFit fit_cox(const SurvivalDataset& data, const CoxOptions& opts = {});

StepFunctiond predict_cox_survival(const CoxFit& fit,
                                   const Eigen::Ref<const Eigen::VectorXd>& x);

std::optional<double> predict_cox_median(const CoxFit& fit,
                                         const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace convsurv
