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

#include "convsurv/cox_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "convsurv/estimators.hpp"

namespace convsurv {

namespace {

constexpr double kNewtonStepTol = 1e-6;
constexpr double kDivergentMove = 1e-2;

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hessian,
                                 const Eigen::VectorXd& gradient) {
  const Eigen::MatrixXd neg = -hessian;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(neg);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const auto diag = ldlt.vectorD();
    if (diag.size() == 0 || diag.minCoeff() > 1e-12 * std::max(1.0, diag.maxCoeff())) {
      return ldlt.solve(gradient);
    }
  }
  // Flat directions (constant columns without ridge) get a zero step.
  return neg.completeOrthogonalDecomposition().solve(gradient);
}

}  // namespace

CoxFit fit_cox(const SurvivalDataset& data, const CoxOptions& opts) {
  if (data.competing_risks()) {
    throw Error(ErrorKind::WrongEstimator,
                "Cox regression needs a single-risk dataset");
  }
  if (data.count(EventStatus::Converted) == 0) {
    throw Error(ErrorKind::DegenerateFit, "Cox regression needs at least one event");
  }
  const Eigen::MatrixXd raw = data.design_matrix();
  const Eigen::VectorXd center = raw.colwise().mean().transpose();
  Eigen::MatrixXd centered = raw.rowwise() - center.transpose();

  std::vector<double> times(data.size());
  std::vector<std::uint8_t> events(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    times[i] = data[i].time;
    events[i] = data[i].status == EventStatus::Converted;
  }
  const CoxPartialLikelihood<double> objective(std::move(centered), times, events);

  const Eigen::Index p = data.n_features();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto state = objective.derivatives(beta, opts.ridge);
  int iter = 0;
  double grad_norm = p > 0 ? state.gradient.lpNorm<Eigen::Infinity>() : 0.0;
  Eigen::VectorXd step = newton_direction(state.hessian, state.gradient);
  // A vanishing gradient alone is not enough: along a separating direction the
  // gradient decays like exp(-|beta|) while Newton steps stay of order one.
  double last_move = 0.0;
  while (grad_norm > opts.tol || step.lpNorm<Eigen::Infinity>() > kNewtonStepTol) {
    if (iter >= opts.max_iter) {
      throw ConvergenceError("Cox fit did not converge in " +
                                 std::to_string(opts.max_iter) + " iterations",
                             beta, grad_norm);
    }
    const double slack = 1e-14 * std::max(1.0, std::abs(state.value));
    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
      candidate = beta + scale * step;
      if (objective.value(candidate, opts.ridge) >= state.value - slack) {
        accepted = true;
        break;
      }
    }
    ++iter;
    if (!accepted) {
      throw ConvergenceError("Cox fit step halving failed to improve the likelihood",
                             beta, grad_norm);
    }
    last_move = scale * step.lpNorm<Eigen::Infinity>();
    beta = candidate;
    if (beta.lpNorm<Eigen::Infinity>() > kCoxSeparationGuard) {
      throw Error(ErrorKind::MonotoneLikelihood,
                  "Cox coefficients diverge (|beta| > 50): a covariate separates "
                  "events; use a positive ridge penalty");
    }
    state = objective.derivatives(beta, opts.ridge);
    grad_norm = state.gradient.lpNorm<Eigen::Infinity>();
    step = newton_direction(state.hessian, state.gradient);
  }
  // Derivatives that underflow to zero after a unit-size move stop the loop
  // before the guard is reached; Newton never ends that way on a finite optimum.
  if (last_move > kDivergentMove) {
    throw Error(ErrorKind::MonotoneLikelihood,
                "Cox derivatives vanished while coefficients were still moving: a "
                "covariate separates events; use a positive ridge penalty");
  }

  // Breslow baseline, shifted so that it applies to uncentered covariates.
  const Eigen::VectorXd eta = objective.design() * beta;
  const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;
  const double offset = std::exp(shift + beta.dot(center));
  const auto order = event_order(data.records());
  struct Group { double time; double events; double weight; };
  std::vector<Group> groups;
  for (std::size_t k = 0; k < order.size();) {
    const double t = data[order[k]].time;
    Group g{t, 0.0, 0.0};
    std::size_t j = k;
    for (; j < order.size() && data[order[j]].time == t; ++j) {
      if (data[order[j]].status == EventStatus::Converted) g.events += 1.0;
      g.weight += std::exp(eta[static_cast<Eigen::Index>(order[j])] - shift);
    }
    groups.push_back(g);
    k = j;
  }
  // Risk-set sums accumulated from the latest time backwards.
  std::vector<double> increments(groups.size(), 0.0);
  double s0 = 0.0;
  for (std::size_t g = groups.size(); g-- > 0;) {
    s0 += groups[g].weight;
    if (groups[g].events > 0.0) increments[g] = groups[g].events / (s0 * offset);
  }
  std::vector<double> knots, values;
  double cum = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].events == 0.0) continue;
    cum += increments[g];
    knots.push_back(groups[g].time);
    values.push_back(cum);
  }

  CoxFit fit;
  fit.beta = std::move(beta);
  fit.baseline_cum_hazard = StepFunctiond(
      Eigen::Map<const Eigen::VectorXd>(knots.data(), static_cast<Eigen::Index>(knots.size())),
      Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())),
      0.0);
  fit.feature_names = data.feature_names();
  fit.convergence = {iter, grad_norm, state.value};
  return fit;
}

StepFunctiond predict_cox_survival(const CoxFit& fit,
                                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != fit.beta.size()) {
    throw Error(ErrorKind::Shape, "covariate vector length does not match the Cox fit");
  }
  const double risk = std::exp(fit.beta.dot(x));
  const auto& h0 = fit.baseline_cum_hazard.values();
  StepFunctiond::Vector values(h0.size());
  for (Eigen::Index k = 0; k < h0.size(); ++k) {
    values[k] = std::exp(-h0[k] * risk);
    if (k > 0) values[k] = std::min(values[k], values[k - 1]);
  }
  return StepFunctiond(fit.baseline_cum_hazard.knots(), std::move(values), 1.0);
}

std::optional<double> predict_cox_median(const CoxFit& fit,
                                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  return median_crossing(predict_cox_survival(fit, x), 0.5);
}

}  // namespace convsurv
