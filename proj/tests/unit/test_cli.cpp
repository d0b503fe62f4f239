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

#include <json.hpp>
#include <sstream>

#include "../fixtures.hpp"

using fixtures::cli;
using fixtures::slurp;

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("generate is deterministic and honours the converter rate") {
  fixtures::TempDir dir("gen");
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  REQUIRE(cli({"generate", "--players", "1000", "--seed", "7", "--out", a}).code == 0);
  REQUIRE(cli({"generate", "--players", "1000", "--seed", "7", "--out", b}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(dir / "a.truth.csv") == slurp(dir / "b.truth.csv"));

  const auto z = (dir / "z.csv").string();
  const auto zt = (dir / "zt.csv").string();
  REQUIRE(cli({"generate", "--players", "500", "--pu-rate", "0", "--out", z, "--truth", zt})
              .code == 0);
  const auto rows = csv_rows(slurp(zt));
  REQUIRE(rows.size() == 501);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] == "0");

  const auto help = cli({"generate", "--help"});
  CHECK(help.out.find("0.053") != std::string::npos);

  CHECK(cli({"generate", "--out", "/nonexistent/dir/x.csv"}).code == 2);
}

TEST_CASE("train, predict and curves") {
  fixtures::TempDir dir("train");
  const auto logs = (dir / "logs.csv").string();
  REQUIRE(cli({"generate", "--players", "3000", "--seed", "2", "--out", logs}).code == 0);

  SUBCASE("rsf-cr without churn labels names the flag") {
    const auto r = cli({"train", logs, "--model", "rsf-cr", "--out", (dir / "m").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("--churn-window") != std::string::npos);
  }

  SUBCASE("rsf model file and predictions") {
    const auto model = (dir / "rsf.json").string();
    REQUIRE(cli({"train", logs, "--model", "rsf", "--trees", "20", "--seed", "1", "--out", model})
                .code == 0);
    const auto doc = nlohmann::json::parse(slurp(model));
    CHECK(doc["forest"]["trees"].size() == 20);
    const auto summary = nlohmann::json::parse(slurp(model + ".summary.json"));
    CHECK(summary["trees"] == 20);

    const auto pred = cli({"predict", "--model-file", model, logs});
    REQUIRE(pred.code == 0);
    const auto rows = csv_rows(pred.out);
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == std::vector<std::string>{"player_id", "predicted_median",
                                              "predicted_converter"});
    bool some_absent = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      REQUIRE(rows[i].size() == 3);
      CHECK((rows[i][2] == "true") == !rows[i][1].empty());
      some_absent = some_absent || rows[i][1].empty();
    }
    CHECK(some_absent);

    // Row order of the input file does not matter.
    std::istringstream in(slurp(logs));
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    std::reverse(lines.begin(), lines.end());
    std::ofstream rev(dir / "reversed.csv");
    rev << header << '\n';
    for (const auto& l : lines) rev << l << '\n';
    rev.close();
    CHECK(cli({"predict", "--model-file", model, (dir / "reversed.csv").string()}).out == pred.out);

    const auto curve = cli({"predict", "--model-file", model, logs, "--curve", rows[1][0]});
    REQUIRE(curve.code == 0);
    const auto pts = csv_rows(curve.out);
    CHECK(pts[0] == std::vector<std::string>{"time", "value"});
    for (std::size_t i = 2; i < pts.size(); ++i) {
      CHECK(std::stod(pts[i][0]) > std::stod(pts[i - 1][0]));
      CHECK(std::stod(pts[i][1]) >= std::stod(pts[i - 1][1]));
    }

    auto tampered = doc;
    tampered["feature_spec_hash"] = "fnv1a:0";
    std::ofstream(dir / "bad.json") << tampered.dump();
    const auto bad = cli({"--json-errors", "predict", "--model-file", (dir / "bad.json").string(), logs});
    CHECK(bad.code == 2);
    const auto err = nlohmann::json::parse(bad.err);
    CHECK(err["error"]["kind"] == "compatibility");
    CHECK(err["error"]["exit_code"] == 2);
  }

  SUBCASE("cox on the playtime axis") {
    const auto model = (dir / "cox.json").string();
    REQUIRE(cli({"train", logs, "--model", "cox", "--target", "playtime", "--out", model}).code == 0);
    const auto doc = nlohmann::json::parse(slurp(model));
    CHECK(doc["kind"] == "cox");
    CHECK(doc["axis"] == "playtime");
  }

  SUBCASE("curves") {
    const auto all = csv_rows(cli({"curves", logs, "--population", "all"}).out);
    const auto conv = csv_rows(cli({"curves", logs, "--population", "converters"}).out);
    REQUIRE(all.size() > 2);
    REQUIRE(conv.size() > 2);
    CHECK(all[0] == std::vector<std::string>{"time", "estimate", "lower", "upper"});
    for (const auto* rows : {&all, &conv}) {
      for (std::size_t i = 1; i < rows->size(); ++i) {
        const double est = std::stod((*rows)[i][1]);
        CHECK(std::stod((*rows)[i][2]) <= est);
        CHECK(est <= std::stod((*rows)[i][3]));
      }
    }
    CHECK(std::stod(conv.back()[1]) == 1.0);
    const double final_all = std::stod(all.back()[1]);
    CHECK(final_all > 0.02);
    CHECK(final_all < 0.12);
    CHECK(cli({"curves", logs, "--level", "1.5"}).code == 1);
  }
}

TEST_CASE("usage and data errors map to exit codes") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"train"}).code == 1);
  CHECK(cli({"evaluate", "logs.csv", "--out-dir", "x"}).code == 1);  // --seed is mandatory
  const auto missing = cli({"--json-errors", "curves", "/nonexistent/logs.csv"});
  CHECK(missing.code == 2);
  CHECK(nlohmann::json::parse(missing.err)["error"]["exit_code"] == 2);

  fixtures::TempDir dir("bad");
  std::ofstream(dir / "bad.csv") << "player_id,day_index,playtime_hours,level,sessions,actions,purchases\n"
                                 << "p1,0,1.0,3,1,1,0\np1,1,1.0,2,1,1,0\n";
  CHECK(cli({"curves", (dir / "bad.csv").string()}).code == 2);
}

TEST_CASE("evaluate writes the report grid") {
  fixtures::TempDir dir("eval");
  const auto logs = (dir / "logs.csv").string();
  REQUIRE(cli({"generate", "--players", "3000", "--seed", "4", "--out", logs}).code == 0);
  const auto out = (dir / "report").string();
  const auto r = cli({"evaluate", logs, "--seed", "3", "--trees", "20", "--out-dir", out});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report" / "report.json"));
  CHECK(report["results"].size() == 12);
  CHECK(r.out == slurp(dir / "report" / "report.txt"));
  for (const auto& row : report["results"]) {
    const std::string stem = row["model"].get<std::string>() + "_" + row["axis"].get<std::string>();
    const auto scatter = csv_rows(slurp(dir / "report" / (stem + ".csv")));
    CHECK(scatter.size() - 1 == row["n_scatter"].get<std::size_t>());
    CHECK(csv_rows(slurp(dir / "report" / (stem + "_loglog.csv"))).size() == scatter.size());
  }
}
