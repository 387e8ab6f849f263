#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"
#include "mfel/features.hpp"
#include "mfel/ml/ensemble.hpp"
#include "mfel/split.hpp"
#include "mfel/util.hpp"

namespace mfel {

// ---------------------------------------------------------------------------
// Metrics

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;

  nlohmann::json to_json() const { return {{"tp", tp}, {"tn", tn}, {"fp", fp}, {"fn", fn}}; }
  static ConfusionCounts from_json(const nlohmann::json& j) {
    return {j.at("tp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
            j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>()};
  }
};

inline ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw LengthMismatch(y_true.size(), y_pred.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t != 0 && t != 1) throw NonBinaryLabel(t);
    if (p != 0 && p != 1) throw NonBinaryLabel(p);
    if (t == 1) (p == 1 ? c.tp : c.fn)++;
    else (p == 1 ? c.fp : c.tn)++;
  }
  return c;
}

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  bool precision_degenerate = false;  // tp + fp = 0
  bool recall_degenerate = false;     // tp + fn = 0

  nlohmann::json to_json() const {
    return {{"accuracy", accuracy},
            {"precision", precision},
            {"recall", recall},
            {"f1", f1},
            {"precision_degenerate", precision_degenerate},
            {"recall_degenerate", recall_degenerate}};
  }
};

// Precision and recall with a zero denominator are reported as 0 and
// flagged; f1 is 0 when precision + recall is 0.
inline Metrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw EmptyPopulation();
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp == 0) m.precision_degenerate = true;
  else m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn == 0) m.recall_degenerate = true;
  else m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitScheme {
  enum class Kind { kfold, holdout } kind = Kind::kfold;
  std::size_t k = 5;
  double test_fraction = 0.2;

  static SplitScheme kfold(std::size_t k) { return {Kind::kfold, k, 0.2}; }
  static SplitScheme holdout(double frac) { return {Kind::holdout, 0, frac}; }

  std::string describe() const {
    if (kind == Kind::kfold) return "stratified " + std::to_string(k) + "-fold";
    char buf[64];
    std::snprintf(buf, sizeof buf, "stratified holdout %.3g", test_fraction);
    return buf;
  }
};

inline std::vector<Fold> split(std::span<const int> labels, const SplitScheme& scheme,
                               std::uint64_t seed) {
  if (scheme.kind == SplitScheme::Kind::kfold) return stratified_kfold(labels, scheme.k, seed);
  return {stratified_holdout(labels, scheme.test_fraction, seed)};
}

inline std::vector<Fold> split(const LabeledDataset& ds, const SplitScheme& scheme, std::uint64_t seed) {
  const auto y = ds.labels();
  return split(std::span<const int>(y), scheme, seed);
}

// ---------------------------------------------------------------------------
// Per-fold matrices

struct FoldMatrices {
  Eigen::MatrixXd train_X, test_X;
  std::vector<int> train_y, test_y;
};

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

inline std::vector<int> take(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

// Folds over a ready-made numeric matrix.
inline std::vector<FoldMatrices> matrix_folds(const Eigen::MatrixXd& X, std::span<const int> y,
                                              const std::vector<Fold>& folds) {
  std::vector<FoldMatrices> out;
  for (const auto& f : folds)
    out.push_back({take_rows(X, f.train), take_rows(X, f.test), take(y, f.train), take(y, f.test)});
  return out;
}

struct FeaturizedFolds {
  FeatureLayout layout;
  std::vector<FoldMatrices> folds;
};

// Fits the featurizer on each training fold and transforms both sides.
inline FeaturizedFolds featurize_folds(const PreparedUsers& p, const std::vector<Fold>& folds,
                                       const FeatureConfig& cfg, std::uint64_t seed) {
  FeaturizedFolds out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto fz = Featurizer::fit(p, folds[f].train, cfg, derive_seed(seed, "fold" + std::to_string(f)));
    const Eigen::MatrixXd X = fz.transform(p);
    out.layout = fz.layout;
    out.folds.push_back({take_rows(X, folds[f].train), take_rows(X, folds[f].test),
                         take(p.labels, folds[f].train), take(p.labels, folds[f].test)});
  }
  return out;
}

inline std::vector<FoldMatrices> ablate_folds(const FeaturizedFolds& ff, const std::set<char>& drop) {
  if (drop.empty()) return ff.folds;
  std::vector<FoldMatrices> out;
  for (const auto& f : ff.folds)
    out.push_back({ablate(f.train_X, ff.layout, drop).X, ablate(f.test_X, ff.layout, drop).X,
                   f.train_y, f.test_y});
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string name;
  std::vector<ConfusionCounts> fold_counts;
  ConfusionCounts counts;  // summed over folds
  Metrics mean;            // fold-averaged metrics

  nlohmann::json to_json() const {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& c : fold_counts) folds.push_back(c.to_json());
    return {{"name", name}, {"counts", counts.to_json()}, {"fold_counts", folds},
            {"metrics", mean.to_json()}};
  }
};

inline ReportRow make_row(std::string name, std::vector<ConfusionCounts> per_fold) {
  ReportRow r;
  r.name = std::move(name);
  r.fold_counts = std::move(per_fold);
  for (const auto& c : r.fold_counts) {
    r.counts += c;
    const auto m = metrics(c);
    r.mean.accuracy += m.accuracy;
    r.mean.precision += m.precision;
    r.mean.recall += m.recall;
    r.mean.f1 += m.f1;
    r.mean.precision_degenerate = r.mean.precision_degenerate || m.precision_degenerate;
    r.mean.recall_degenerate = r.mean.recall_degenerate || m.recall_degenerate;
  }
  const auto k = static_cast<double>(r.fold_counts.size());
  r.mean.accuracy /= k;
  r.mean.precision /= k;
  r.mean.recall /= k;
  r.mean.f1 /= k;
  return r;
}

struct EvalReport {
  std::string title;
  std::vector<ReportRow> rows;
  std::string scheme;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::string layout;

  const ReportRow& row(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return r;
    throw Error("report has no row '" + name + "'");
  }

  std::string to_text() const {
    std::size_t w = 5;
    for (const auto& r : rows) w = std::max(w, r.name.size());
    std::string out = title + "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %13s  %10s  %12s  %12s\n", static_cast<int>(w), "Model",
                  "Precision (%)", "Recall (%)", "F1-Score (%)", "Accuracy (%)");
    out += buf;
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%-*s  %13s  %10s  %12s  %12s\n", static_cast<int>(w),
                    r.name.c_str(), format_percent(r.mean.precision).c_str(),
                    format_percent(r.mean.recall).c_str(), format_percent(r.mean.f1).c_str(),
                    format_percent(r.mean.accuracy).c_str());
      out += buf;
    }
    out += "scheme: " + scheme + "\n";
    out += "seed: " + std::to_string(seed) + "\n";
    out += "config: " + config_fingerprint + "\n";
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& r : rows) jr.push_back(r.to_json());
    return {{"title", title}, {"rows", jr}, {"scheme", scheme}, {"seed", seed},
            {"config_fingerprint", config_fingerprint}, {"layout", layout}};
  }
};

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  FeatureConfig features;
  ml::EnsembleParams models;
  SplitScheme scheme;
  std::uint64_t seed = 42;
  std::set<char> drop;
  std::string config_fingerprint;
};

inline std::uint64_t model_seed(std::uint64_t seed, std::size_t fold) {
  return derive_seed(seed, "models" + std::to_string(fold));
}

struct FoldPredictions {
  std::array<std::vector<ConfusionCounts>, 4> counts;  // LR, XGB, NN, MFEL
};

inline FoldPredictions evaluate_ensemble(const std::vector<FoldMatrices>& folds,
                                         const ml::EnsembleParams& params, std::uint64_t seed) {
  FoldPredictions out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fm = folds[f];
    const auto e = ml::train_ensemble(fm.train_X, fm.train_y, params, model_seed(seed, f));
    std::array<std::vector<int>, 4> pred;
    for (Eigen::Index i = 0; i < fm.test_X.rows(); ++i) {
      const Eigen::VectorXd x = fm.test_X.row(i).transpose();
      const auto votes = ml::base_votes(e, ml::base_probabilities(e, x));
      for (std::size_t k = 0; k < 3; ++k) pred[k].push_back(votes[k]);
      pred[3].push_back(ml::ensemble_vote(votes));
    }
    for (std::size_t k = 0; k < 4; ++k) out.counts[k].push_back(confusion(fm.test_y, pred[k]));
  }
  return out;
}

// Fits featurizers and classifiers on training folds only and reports the
// three base models and the ensemble on the held-out folds.
inline EvalReport report_from_folds(const FeaturizedFolds& ff, const ExperimentConfig& cfg) {
  const auto preds = evaluate_ensemble(ablate_folds(ff, cfg.drop), cfg.models, cfg.seed);
  EvalReport r;
  r.title = "Classification results";
  const std::array<const char*, 4> names = {"LR", "XGB", "NN", "MFEL"};
  for (std::size_t k = 0; k < 4; ++k) r.rows.push_back(make_row(names[k], preds.counts[k]));
  r.scheme = cfg.scheme.describe();
  r.seed = cfg.seed;
  r.config_fingerprint = cfg.config_fingerprint;
  r.layout = ablate(Eigen::MatrixXd(0, static_cast<Eigen::Index>(ff.layout.total())), ff.layout, cfg.drop)
                 .layout.describe();
  return r;
}

inline FeaturizedFolds featurize_experiment(const PreparedUsers& p, const ExperimentConfig& cfg) {
  const auto folds = split(p.labels, cfg.scheme, derive_seed(cfg.seed, "split"));
  return featurize_folds(p, folds, cfg.features, cfg.seed);
}

inline EvalReport run_experiment(const PreparedUsers& p, const ExperimentConfig& cfg) {
  return report_from_folds(featurize_experiment(p, cfg), cfg);
}

// Row label for a modality set, e.g. "MFEL (t+e+d+u)".
inline std::string ablation_label(const std::set<char>& drop) {
  std::string kept;
  for (char c : std::string("vtedu"))
    if (!drop.count(c)) {
      if (!kept.empty()) kept += '+';
      kept += c;
    }
  return "MFEL (" + kept + ")";
}

// The five leave-one-out variants followed by the full model, each scored by
// the ensemble.
inline EvalReport ablation_from_folds(const FeaturizedFolds& ff, const ExperimentConfig& cfg) {
  EvalReport r;
  r.title = "Modality ablation";
  std::vector<std::set<char>> variants;
  for (char c : std::string("vtedu")) variants.push_back({c});
  variants.push_back({});
  for (const auto& drop : variants) {
    const auto preds = evaluate_ensemble(ablate_folds(ff, drop), cfg.models, cfg.seed);
    r.rows.push_back(make_row(ablation_label(drop), preds.counts[3]));
  }
  r.scheme = cfg.scheme.describe();
  r.seed = cfg.seed;
  r.config_fingerprint = cfg.config_fingerprint;
  r.layout = ff.layout.describe();
  return r;
}

inline EvalReport ablation_suite(const PreparedUsers& p, const ExperimentConfig& cfg) {
  return ablation_from_folds(featurize_experiment(p, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Grid search

// Parameter name -> candidate values. Names are kept in sorted order, which
// fixes the lexicographic tie-break.
using ParamGrid = std::map<std::string, std::vector<double>>;
using ParamPoint = std::map<std::string, double>;

inline std::vector<ParamPoint> expand_grid(const ParamGrid& grid) {
  if (grid.empty()) throw EmptyGrid();
  std::vector<ParamPoint> points{ParamPoint{}};
  for (const auto& [name, values] : grid) {
    if (values.empty()) throw EmptyGrid();
    std::vector<ParamPoint> next;
    for (const auto& p : points)
      for (double v : values) {
        auto q = p;
        q[name] = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

inline ParamGrid grid_from_json(const nlohmann::json& j) {
  ParamGrid g;
  for (const auto& [name, values] : j.items()) {
    if (values.is_array()) g[name] = values.get<std::vector<double>>();
    else g[name] = {values.get<double>()};
  }
  return g;
}

namespace detail {

inline std::size_t as_count(const std::string& name, double v) {
  if (!(v >= 0) || v != std::floor(v)) throw ConfigError("parameter " + name + " must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

inline void apply_param(ml::LogisticParams& p, const std::string& name, double v) {
  if (name == "C") p.C = v;
  else if (name == "tol") p.tol = v;
  else if (name == "max_iter") p.max_iter = as_count(name, v);
  else throw ConfigError("unknown logistic parameter: " + name);
}

inline void apply_param(ml::GbtParams& p, const std::string& name, double v) {
  if (name == "rounds") p.rounds = as_count(name, v);
  else if (name == "max_depth") p.max_depth = as_count(name, v);
  else if (name == "learning_rate") p.learning_rate = v;
  else if (name == "gamma") p.gamma = v;
  else if (name == "reg_lambda") p.reg_lambda = v;
  else if (name == "scale_pos_weight") p.scale_pos_weight = v;
  else throw ConfigError("unknown gbt parameter: " + name);
}

inline void apply_param(ml::MlpParams& p, const std::string& name, double v) {
  if (name == "batch_size") p.batch_size = as_count(name, v);
  else if (name == "learning_rate") p.learning_rate = v;
  else if (name == "dropout") p.dropout = v;
  else if (name == "epochs") p.epochs = as_count(name, v);
  else if (name == "patience") p.patience = as_count(name, v);
  else if (name == "validation_fraction") p.validation_fraction = v;
  else throw ConfigError("unknown mlp parameter: " + name);
}

}  // namespace detail

// model: "logistic", "gbt", "mlp", or "ensemble" (names prefixed with
// "logistic.", "gbt." or "mlp.").
inline ml::EnsembleParams with_params(ml::EnsembleParams base, const std::string& model,
                                      const ParamPoint& point) {
  for (const auto& [name, v] : point) {
    std::string target = model, key = name;
    if (model == "ensemble") {
      const auto dot = name.find('.');
      if (dot == std::string::npos) throw ConfigError("ensemble grid names need a model prefix: " + name);
      target = name.substr(0, dot);
      key = name.substr(dot + 1);
    }
    if (target == "logistic") detail::apply_param(base.logistic, key, v);
    else if (target == "gbt") detail::apply_param(base.gbt, key, v);
    else if (target == "mlp") detail::apply_param(base.mlp, key, v);
    else throw ConfigError("unknown model: " + target);
  }
  return base;
}

struct GridRow {
  ParamPoint params;
  ReportRow result;
};

struct GridResult {
  std::string model;
  std::vector<GridRow> rows;
  std::size_t best = 0;
  std::uint64_t seed = 0;
  std::string config_fingerprint;

  const ParamPoint& best_params() const { return rows.at(best).params; }

  std::string to_text() const {
    std::string out = "Grid search (" + model + ")\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::string params;
      for (const auto& [k, v] : rows[i].params) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s%s=%g", params.empty() ? "" : " ", k.c_str(), v);
        params += buf;
      }
      out += (i == best ? "* " : "  ") + params + "  accuracy " +
             format_percent(rows[i].result.mean.accuracy) + "  f1 " +
             format_percent(rows[i].result.mean.f1) + "\n";
    }
    out += "seed: " + std::to_string(seed) + "\n";
    out += "config: " + config_fingerprint + "\n";
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& r : rows) jr.push_back({{"params", r.params}, {"result", r.result.to_json()}});
    return {{"model", model}, {"rows", jr}, {"best", best}, {"best_params", best_params()},
            {"seed", seed}, {"config_fingerprint", config_fingerprint}};
  }
};

// Scores one model configuration on every fold. For "ensemble" the majority
// vote is scored.
inline ReportRow score_model(const std::vector<FoldMatrices>& folds, const std::string& model,
                             const ml::EnsembleParams& params, std::uint64_t seed) {
  std::vector<ConfusionCounts> counts;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fm = folds[f];
    const auto s = model_seed(seed, f);
    std::vector<int> pred;
    if (model == "ensemble") {
      const auto e = ml::train_ensemble(fm.train_X, fm.train_y, params, s);
      for (Eigen::Index i = 0; i < fm.test_X.rows(); ++i)
        pred.push_back(ml::ensemble_predict(e, fm.test_X.row(i).transpose()));
    } else if (model == "logistic") {
      const auto m = ml::train_logistic(fm.train_X, fm.train_y, params.logistic, derive_seed(s, "logistic"));
      for (Eigen::Index i = 0; i < fm.test_X.rows(); ++i)
        pred.push_back(ml::predict_logistic(m, fm.test_X.row(i).transpose()) >= 0.5);
    } else if (model == "gbt") {
      const auto m = ml::train_gbt(fm.train_X, fm.train_y, params.gbt, derive_seed(s, "gbt"));
      for (Eigen::Index i = 0; i < fm.test_X.rows(); ++i)
        pred.push_back(ml::predict_gbt(m, fm.test_X.row(i).transpose()) >= 0.5);
    } else if (model == "mlp") {
      const auto m = ml::train_mlp(fm.train_X, fm.train_y, params.mlp, derive_seed(s, "mlp"));
      for (Eigen::Index i = 0; i < fm.test_X.rows(); ++i)
        pred.push_back(ml::predict_mlp(m, fm.test_X.row(i).transpose()) >= 0.5);
    } else {
      throw ConfigError("unknown model: " + model);
    }
    counts.push_back(confusion(fm.test_y, pred));
  }
  return make_row(model, std::move(counts));
}

// Exhaustive search. Best is the highest mean accuracy, then the highest
// mean f1, then the lexicographically smallest parameter values.
inline GridResult grid_search(const std::vector<FoldMatrices>& folds, const std::string& model,
                              const ParamGrid& grid, const ml::EnsembleParams& base,
                              std::uint64_t seed) {
  GridResult g;
  g.model = model;
  g.seed = seed;
  for (const auto& point : expand_grid(grid))
    g.rows.push_back({point, score_model(folds, model, with_params(base, model, point), seed)});
  auto values = [](const ParamPoint& p) {
    std::vector<double> v;
    for (const auto& kv : p) v.push_back(kv.second);
    return v;
  };
  for (std::size_t i = 1; i < g.rows.size(); ++i) {
    const auto& a = g.rows[i].result.mean;
    const auto& b = g.rows[g.best].result.mean;
    if (a.accuracy > b.accuracy ||
        (a.accuracy == b.accuracy &&
         (a.f1 > b.f1 || (a.f1 == b.f1 && values(g.rows[i].params) < values(g.rows[g.best].params)))))
      g.best = i;
  }
  return g;
}

inline GridResult grid_search(const Eigen::MatrixXd& X, std::span<const int> y,
                              const std::string& model, const ParamGrid& grid,
                              const SplitScheme& scheme, std::uint64_t seed,
                              const ml::EnsembleParams& base = {}) {
  const auto folds = split(y, scheme, derive_seed(seed, "split"));
  return grid_search(matrix_folds(X, y, folds), model, grid, base, seed);
}

inline GridResult grid_search(const PreparedUsers& p, const std::string& model,
                              const ParamGrid& grid, const ExperimentConfig& cfg) {
  auto ff = featurize_experiment(p, cfg);
  auto g = grid_search(ablate_folds(ff, cfg.drop), model, grid, cfg.models, cfg.seed);
  g.config_fingerprint = cfg.config_fingerprint;
  return g;
}

}  // namespace mfel
