#pragma once

#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fairbbr/errors.hpp"
#include "fairbbr/ml/cross_validate.hpp"

namespace fairbbr::ml {

// Versioned JSON snapshot of a trained model: scaler moments,
// hyperparameters, flattened weights, optional training trace and scores.
struct ModelArtifact {
  static constexpr int kSchemaVersion = 1;

  std::string kind;  // linear_svm | decision_tree | mlp_classifier | mlp_regressor
  Standardizer scaler;
  std::variant<LinearSvm, DecisionTree, Mlp> model;
  std::vector<std::pair<int, double>> trace;
  nlohmann::json hyperparameters = nlohmann::json::object();
  nlohmann::json scores = nlohmann::json::object();
  // Regression targets travel standardized; these moments undo that.
  double target_mean = 0;
  double target_std = 1;

  int predict_class(std::span<const double> raw) const {
    auto x = scaler.transform_row(raw);
    if (std::holds_alternative<LinearSvm>(model)) return std::get<LinearSvm>(model).predict(x);
    if (std::holds_alternative<DecisionTree>(model)) {
      return std::get<DecisionTree>(model).predict(x);
    }
    return std::get<Mlp>(model).predict_class(x);
  }

  double predict_value(std::span<const double> raw) const {
    auto x = scaler.transform_row(raw);
    double standardized = std::get<Mlp>(model).predict_value(x);
    return standardized * target_std + target_mean;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = kind;
    j["scaler"] = {{"means", scaler.means()}, {"stds", scaler.stds()}};
    j["hyperparameters"] = hyperparameters;
    j["scores"] = scores;
    if (!trace.empty()) {
      j["trace"] = nlohmann::json::array();
      for (const auto& [epoch, loss] : trace) j["trace"].push_back({epoch, loss});
    }
    if (const auto* svm = std::get_if<LinearSvm>(&model)) {
      j["model"] = {{"weights", svm->weights()},
                    {"bias", svm->bias()},
                    {"lambda", svm->params().lambda}};
    } else if (const auto* tree = std::get_if<DecisionTree>(&model)) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : tree->nodes()) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"leaf_class", n.leaf_class}});
      }
      j["model"] = {{"nodes", nodes}};
    } else {
      const auto& mlp = std::get<Mlp>(model);
      j["model"] = {{"inputs", mlp.inputs()},
                    {"hidden", mlp.hidden()},
                    {"task", mlp.task() == Mlp::Task::Regression ? "regression"
                                                                 : "classification"},
                    {"parameters", mlp.parameters()}};
      j["target_scaler"] = {{"mean", target_mean}, {"std", target_std}};
    }
    return j;
  }

  static ModelArtifact from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ConfigError("model artifact: unsupported schema_version");
    }
    ModelArtifact a;
    a.kind = j.at("kind").get<std::string>();
    a.scaler.set_moments(j.at("scaler").at("means").get<std::vector<double>>(),
                         j.at("scaler").at("stds").get<std::vector<double>>());
    if (j.contains("hyperparameters")) a.hyperparameters = j.at("hyperparameters");
    if (j.contains("scores")) a.scores = j.at("scores");
    if (j.contains("trace")) {
      for (const auto& t : j.at("trace")) {
        a.trace.emplace_back(t.at(0).get<int>(), t.at(1).get<double>());
      }
    }
    const auto& m = j.at("model");
    if (a.kind == "linear_svm") {
      LinearSvm svm(LinearSvm::Params{m.at("lambda").get<double>(), 0});
      svm.set_state(m.at("weights").get<std::vector<double>>(), m.at("bias").get<double>());
      a.model = std::move(svm);
    } else if (a.kind == "decision_tree") {
      DecisionTree tree;
      std::vector<DecisionTree::Node> nodes;
      for (const auto& nj : m.at("nodes")) {
        nodes.push_back({nj.at("feature").get<int>(), nj.at("threshold").get<double>(),
                         nj.at("left").get<int>(), nj.at("right").get<int>(),
                         nj.at("leaf_class").get<int>()});
      }
      tree.set_nodes(std::move(nodes));
      a.model = std::move(tree);
    } else if (a.kind == "mlp_classifier" || a.kind == "mlp_regressor") {
      Mlp mlp;
      mlp.restore(m.at("inputs").get<int>(), m.at("hidden").get<int>(),
                  m.at("task").get<std::string>() == "regression"
                      ? Mlp::Task::Regression
                      : Mlp::Task::Classification,
                  m.at("parameters").get<std::vector<double>>());
      a.model = std::move(mlp);
      if (j.contains("target_scaler")) {
        a.target_mean = j.at("target_scaler").at("mean").get<double>();
        a.target_std = j.at("target_scaler").at("std").get<double>();
      }
    } else {
      throw ConfigError("model artifact: unknown kind '" + a.kind + "'");
    }
    return a;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << to_json().dump(2) << '\n';
  }

  static ModelArtifact load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("model artifact: invalid JSON: ") + e.what());
    }
    return from_json(j);
  }
};

}  // namespace fairbbr::ml
