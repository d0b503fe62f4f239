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

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace convsurv {

enum class ErrorKind {
  EmptyInput,
  WrongEstimator,
  InvalidCurve,
  InvalidEvent,
  InvalidModel,
  Shape,
  DegenerateFit,
  Convergence,
  MonotoneLikelihood,
  Stratification,
  UndefinedMetric,
  Parse,
  Validation,
  Config,
  Compatibility,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Newton iterations ran out; the last iterate is kept for diagnostics.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, Eigen::VectorXd last_beta,
                   double gradient_norm)
      : Error(ErrorKind::Convergence, message),
        last_beta_(std::move(last_beta)),
        gradient_norm_(gradient_norm) {}

  const Eigen::VectorXd& last_beta() const noexcept { return last_beta_; }
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  Eigen::VectorXd last_beta_;
  double gradient_norm_;
};

// Parse failure with a 1-based line number (0 when not tied to a line).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error(ErrorKind::Parse, message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace convsurv
