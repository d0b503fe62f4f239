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

#include "convsurv/model_file.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace convsurv {
namespace {

using nlohmann::json;

json rle_encode(const std::vector<std::uint32_t>& v) {
  json out = json::array();
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    out.push_back(v[i]);
    out.push_back(j - i);
    i = j;
  }
  return out;
}

std::vector<std::uint32_t> rle_decode(const json& pairs, std::size_t expected) {
  if (!pairs.is_array() || pairs.size() % 2 != 0) {
    throw Error(ErrorKind::InvalidModel, "leaf counts are not [value, run] pairs");
  }
  std::vector<std::uint32_t> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < pairs.size(); i += 2) {
    const auto value = pairs[i].get<std::uint32_t>();
    const auto run = pairs[i + 1].get<std::size_t>();
    if (out.size() + run > expected) break;
    out.insert(out.end(), run, value);
  }
  if (out.size() != expected) {
    throw Error(ErrorKind::InvalidModel, "leaf counts do not match the time grid");
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json config_json(const ForestConfig& c) {
  json j;
  j["n_trees"] = c.n_trees;
  j["mtry"] = c.mtry ? json(*c.mtry) : json(nullptr);
  j["min_node_events"] = c.min_node_events;
  j["bootstrap"] = c.bootstrap;
  j["alpha"] = c.alpha;
  j["max_depth"] = c.max_depth ? json(*c.max_depth) : json(nullptr);
  j["seed"] = c.seed;
  j["max_cutpoints"] = c.max_cutpoints;
  j["aggregation"] = to_string(c.aggregation);
  return j;
}

ForestConfig config_from(const json& j) {
  ForestConfig c;
  c.n_trees = j.at("n_trees").get<std::size_t>();
  if (!j.at("mtry").is_null()) c.mtry = j["mtry"].get<std::size_t>();
  c.min_node_events = j.at("min_node_events").get<std::size_t>();
  c.bootstrap = j.at("bootstrap").get<bool>();
  c.alpha = j.at("alpha").get<double>();
  if (!j.at("max_depth").is_null()) c.max_depth = j["max_depth"].get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_cutpoints = j.at("max_cutpoints").get<std::size_t>();
  c.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
  return c;
}

ForestKind forest_kind(ModelKind kind) {
  switch (kind) {
    case ModelKind::Rsf: return ForestKind::RandomSurvival;
    case ModelKind::Cif: return ForestKind::ConditionalInference;
    case ModelKind::RsfCr: return ForestKind::CompetingRisks;
    case ModelKind::Cox: break;
  }
  throw Error(ErrorKind::InvalidModel, "cox is not a forest kind");
}

json forest_json(const ForestModel& f) {
  json j;
  j["config"] = config_json(f.config());
  j["grid"] = vector_json(f.time_grid());
  auto& trees = j["trees"] = json::array();
  for (const auto& t : f.trees()) {
    json tj;
    tj["feature"] = t.feature;
    tj["threshold"] = t.threshold;
    tj["left"] = t.left;
    tj["right"] = t.right;
    tj["leaf"] = t.leaf;
    auto& leaves = tj["leaves"] = json::array();
    for (const auto& l : t.leaves) {
      json lj;
      lj["at_risk"] = rle_encode(l.at_risk);
      lj["converted"] = rle_encode(l.converted);
      lj["churned"] = rle_encode(l.churned);
      leaves.push_back(std::move(lj));
    }
    trees.push_back(std::move(tj));
  }
  return j;
}

ForestModel forest_from(const json& j, ModelKind kind, std::vector<std::string> features,
                        TimeAxis axis) {
  Eigen::VectorXd grid = vector_from(j.at("grid"));
  const auto g = static_cast<std::size_t>(grid.size());
  std::vector<SurvivalTree> trees;
  for (const auto& tj : j.at("trees")) {
    SurvivalTree t;
    t.feature = tj.at("feature").get<std::vector<std::int32_t>>();
    t.threshold = tj.at("threshold").get<std::vector<double>>();
    t.left = tj.at("left").get<std::vector<std::int32_t>>();
    t.right = tj.at("right").get<std::vector<std::int32_t>>();
    t.leaf = tj.at("leaf").get<std::vector<std::int32_t>>();
    for (const auto& lj : tj.at("leaves")) {
      LeafTable l;
      l.at_risk = rle_decode(lj.at("at_risk"), g);
      l.converted = rle_decode(lj.at("converted"), g);
      const auto& churned = lj.at("churned");
      if (!churned.empty()) l.churned = rle_decode(churned, g);
      t.leaves.push_back(std::move(l));
    }
    trees.push_back(std::move(t));
  }
  return ForestModel(forest_kind(kind), config_from(j.at("config")), std::move(features),
                     axis, std::move(grid), std::move(trees));
}

}  // namespace

std::string serialize_model(const TrainedModel& m) {
  json doc;
  doc["format"] = "convsurv-model";
  doc["version"] = kModelFormatVersion;
  doc["kind"] = to_string(m.kind);
  doc["axis"] = to_string(m.axis);
  doc["features"] = m.feature_names;
  doc["feature_spec_hash"] = m.feature_hash;
  doc["churn_window"] = m.churn_window ? json(*m.churn_window) : json(nullptr);
  doc["seed"] = m.seed;
  if (const auto* cox = std::get_if<CoxFit>(&m.model)) {
    json c;
    c["beta"] = vector_json(cox->beta);
    c["baseline"] = {{"knots", vector_json(cox->baseline_cum_hazard.knots())},
                     {"values", vector_json(cox->baseline_cum_hazard.values())},
                     {"left", cox->baseline_cum_hazard.left_value()}};
    c["iterations"] = cox->convergence.iterations;
    c["gradient_norm"] = cox->convergence.gradient_norm;
    c["log_partial_likelihood"] = cox->convergence.log_partial_likelihood;
    doc["cox"] = std::move(c);
  } else {
    doc["forest"] = forest_json(std::get<ForestModel>(m.model));
  }
  return doc.dump() + "\n";
}

TrainedModel deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::InvalidModel, std::string("model file is not JSON: ") + ex.what());
  }
  try {
    if (doc.value("format", "") != "convsurv-model") {
      throw Error(ErrorKind::InvalidModel, "not a convsurv model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::Compatibility,
                  "model file format version " + std::to_string(version) +
                      " is not supported (expected " +
                      std::to_string(kModelFormatVersion) + ")");
    }
    TrainedModel m;
    m.kind = parse_model_kind(doc.at("kind").get<std::string>());
    m.axis = parse_time_axis(doc.at("axis").get<std::string>());
    m.feature_names = doc.at("features").get<std::vector<std::string>>();
    m.feature_hash = doc.at("feature_spec_hash").get<std::string>();
    if (!doc.at("churn_window").is_null()) m.churn_window = doc["churn_window"].get<int>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    if (m.kind == ModelKind::Cox) {
      const auto& c = doc.at("cox");
      CoxFit fit;
      fit.beta = vector_from(c.at("beta"));
      const auto& b = c.at("baseline");
      fit.baseline_cum_hazard = StepFunctiond(vector_from(b.at("knots")),
                                              vector_from(b.at("values")),
                                              b.at("left").get<double>());
      fit.feature_names = m.feature_names;
      fit.convergence = {c.at("iterations").get<int>(), c.at("gradient_norm").get<double>(),
                         c.at("log_partial_likelihood").get<double>()};
      if (fit.beta.size() != static_cast<Eigen::Index>(m.feature_names.size())) {
        throw Error(ErrorKind::InvalidModel, "coefficient count differs from feature count");
      }
      m.model = std::move(fit);
    } else {
      m.model = forest_from(doc.at("forest"), m.kind, m.feature_names, m.axis);
    }
    return m;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::InvalidModel, std::string("malformed model file: ") + ex.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << serialize_model(model);
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

std::optional<double> predict_median(const TrainedModel& model,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (const auto* cox = std::get_if<CoxFit>(&model.model)) return predict_cox_median(*cox, x);
  return predict_forest_median(std::get<ForestModel>(model.model), x);
}

StepFunctiond predict_incidence(const TrainedModel& model,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (const auto* cox = std::get_if<CoxFit>(&model.model)) {
    return survival_to_incidence(predict_cox_survival(*cox, x));
  }
  const auto& forest = std::get<ForestModel>(model.model);
  if (forest.kind() == ForestKind::CompetingRisks) {
    return predict_forest_incidence(forest, x, EventStatus::Converted);
  }
  return survival_to_incidence(predict_forest_survival(forest, x));
}

}  // namespace convsurv
