#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "mfel/ml/gbt.hpp"
#include "mfel/ml/logistic.hpp"
#include "mfel/ml/mlp.hpp"
#include "mfel/util.hpp"

namespace mfel::ml {

inline constexpr std::array<const char*, 3> kBaseModelNames = {"LR", "XGB", "NN"};

struct EnsembleParams {
  LogisticParams logistic;
  GbtParams gbt;
  MlpParams mlp;
};

struct EnsembleModel {
  LogisticModel logistic;
  GbtModel gbt;
  MlpModel mlp;
  std::array<double, 3> thresholds{0.5, 0.5, 0.5};
  std::string layout_fingerprint;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const EnsembleModel& o) const {
    return logistic == o.logistic && gbt == o.gbt && mlp == o.mlp && thresholds == o.thresholds &&
           layout_fingerprint == o.layout_fingerprint && metadata == o.metadata;
  }

  nlohmann::json to_json() const {
    return {{"format", "mfel-model-bundle/1"},
            {"logistic", logistic.to_json()},
            {"gbt", gbt.to_json()},
            {"mlp", mlp.to_json()},
            {"thresholds", thresholds},
            {"layout_fingerprint", layout_fingerprint},
            {"metadata", metadata}};
  }

  static EnsembleModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "mfel-model-bundle/1") throw Error("not a model bundle");
    EnsembleModel e;
    e.logistic = LogisticModel::from_json(j.at("logistic"));
    e.gbt = GbtModel::from_json(j.at("gbt"));
    e.mlp = MlpModel::from_json(j.at("mlp"));
    e.thresholds = j.at("thresholds").get<std::array<double, 3>>();
    e.layout_fingerprint = j.at("layout_fingerprint").get<std::string>();
    e.metadata = j.at("metadata");
    return e;
  }

  void save(const std::string& path) const { write_file(path, to_json().dump(1) + "\n"); }
  static EnsembleModel load(const std::string& path) {
    return from_json(nlohmann::json::parse(read_file(path)));
  }
};

// Majority of three binary votes.
inline int ensemble_vote(const std::array<int, 3>& votes) {
  return votes[0] + votes[1] + votes[2] >= 2 ? 1 : 0;
}

inline std::array<double, 3> base_probabilities(const EnsembleModel& e, const Eigen::VectorXd& x) {
  return {predict_logistic(e.logistic, x), predict_gbt(e.gbt, x), predict_mlp(e.mlp, x)};
}

inline std::array<int, 3> base_votes(const EnsembleModel& e, const std::array<double, 3>& probs) {
  std::array<int, 3> v{};
  for (std::size_t k = 0; k < 3; ++k) v[k] = probs[k] >= e.thresholds[k] ? 1 : 0;
  return v;
}

inline int ensemble_predict(const EnsembleModel& e, const Eigen::VectorXd& x) {
  return ensemble_vote(base_votes(e, base_probabilities(e, x)));
}

// Each base model gets its own seed derived from the shared one.
inline EnsembleModel train_ensemble(const Eigen::MatrixXd& X, std::span<const int> y,
                                    const EnsembleParams& params, std::uint64_t seed) {
  EnsembleModel e;
  e.logistic = train_logistic(X, y, params.logistic, derive_seed(seed, "logistic"));
  e.gbt = train_gbt(X, y, params.gbt, derive_seed(seed, "gbt"));
  e.mlp = train_mlp(X, y, params.mlp, derive_seed(seed, "mlp"));
  e.metadata["seed"] = seed;
  e.metadata["train_rows"] = X.rows();
  e.metadata["input_dim"] = X.cols();
  return e;
}

}  // namespace mfel::ml
