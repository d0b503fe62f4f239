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

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "convsurv/cli_commands.hpp"
#include "convsurv/survival_core.hpp"

namespace fixtures {

using convsurv::EventStatus;

struct Row {
  double time;
  EventStatus status;
  std::vector<double> x = {0.0};
};

inline convsurv::SurvivalDataset dataset(const std::vector<Row>& rows, bool competing = false,
                                         std::vector<std::string> names = {}) {
  std::vector<convsurv::SurvivalRecord> rec;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    convsurv::SurvivalRecord r;
    r.subject_id = "s" + std::to_string(i);
    r.time = rows[i].time;
    r.status = rows[i].status;
    r.covariates = Eigen::Map<const Eigen::VectorXd>(rows[i].x.data(),
                                                     static_cast<Eigen::Index>(rows[i].x.size()));
    rec.push_back(std::move(r));
  }
  if (names.empty()) {
    const std::size_t p = rows.empty() ? 1 : rows.front().x.size();
    for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  return convsurv::SurvivalDataset(std::move(rec), std::move(names),
                                   convsurv::TimeAxis::Lifetime, competing);
}

// Pure-noise covariates; exponential event and censoring times rounded up.
inline convsurv::SurvivalDataset noise_dataset(std::uint64_t seed, std::size_t n,
                                               std::size_t p = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> unit_exp(1.0);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Row r;
    r.x.resize(p);
    for (auto& v : r.x) v = normal(rng);
    const double t = unit_exp(rng) * 10.0, c = unit_exp(rng) * 15.0;
    r.time = std::ceil(std::min(t, c));
    r.status = t <= c ? EventStatus::Converted : EventStatus::Censored;
    rows.push_back(std::move(r));
  }
  return dataset(rows);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("convsurv_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "convsurv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = convsurv::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace fixtures
