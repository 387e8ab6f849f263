#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"
#include "mfel/eval.hpp"
#include "mfel/features.hpp"
#include "mfel/ml/ensemble.hpp"

namespace mfel {

struct PipelineConfig {
  std::string dataset;
  std::string cache;
  LexiconPaths lexicons;
  std::string out = "out";
  bool offline = true;
  std::uint64_t seed = 42;
  std::size_t min_words = 5;
  FeatureConfig features;
  ml::EnsembleParams models;
  SplitScheme scheme = SplitScheme::kfold(5);
  std::string drop;  // modality letters left out of evaluate/train
  std::string grid;  // grid file for gridsearch

  // Everything that influences results. Output location and the offline
  // switch are excluded so identical runs in different places agree.
  nlohmann::json to_json() const {
    const auto& l = models.logistic;
    const auto& g = models.gbt;
    const auto& m = models.mlp;
    return {
        {"dataset", dataset},
        {"cache", cache},
        {"lexicons", {{"stopwords", lexicons.stopwords}, {"emotion", lexicons.emotion},
                      {"emoji", lexicons.emoji}, {"categories", lexicons.categories},
                      {"depression_terms", lexicons.depression_terms}}},
        {"seed", seed},
        {"min_words", min_words},
        {"features", features.to_json()},
        {"logistic", {{"C", l.C}, {"tol", l.tol}, {"max_iter", l.max_iter}}},
        {"gbt", {{"rounds", g.rounds}, {"max_depth", g.max_depth}, {"learning_rate", g.learning_rate},
                 {"gamma", std::isinf(g.gamma) ? nlohmann::json("inf") : nlohmann::json(g.gamma)},
                 {"reg_lambda", g.reg_lambda}, {"scale_pos_weight", g.scale_pos_weight}}},
        {"mlp", {{"hidden", m.hidden}, {"batch_size", m.batch_size}, {"learning_rate", m.learning_rate},
                 {"dropout", m.dropout}, {"epochs", m.epochs},
                 {"validation_fraction", m.validation_fraction}, {"patience", m.patience}}},
        {"scheme", scheme.describe()},
        {"drop", drop},
    };
  }

  // Input files enter by content, not by path, so the fingerprint survives
  // moving the data around.
  std::string fingerprint() const {
    auto j = to_json();
    auto by_content = [](const std::string& path) -> nlohmann::json {
      if (path.empty() || !std::filesystem::exists(path)) return nullptr;
      return file_sha256(path);
    };
    j["dataset"] = by_content(dataset);
    j["cache"] = by_content(cache);
    for (auto& [key, value] : j["lexicons"].items()) value = by_content(value.get<std::string>());
    return sha256_hex(j.dump());
  }

  ExperimentConfig experiment() const {
    ExperimentConfig e;
    e.features = features;
    e.models = models;
    e.scheme = scheme;
    e.seed = seed;
    e.drop = parse_modalities(drop);
    e.config_fingerprint = fingerprint();
    return e;
  }

  void validate() const {
    namespace fs = std::filesystem;
    if (dataset.empty()) throw ConfigError("no dataset path given");
    auto need = [](const std::string& what, const std::string& path) {
      if (path.empty()) throw ConfigError("no path given for " + what);
      if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
    };
    need("dataset", dataset);
    need("stopword list", lexicons.stopwords);
    need("emotion lexicon", lexicons.emotion);
    need("emoji sentiment table", lexicons.emoji);
    need("category lexicon", lexicons.categories);
    need("depression term list", lexicons.depression_terms);
    parse_modalities(drop);
  }
};

namespace detail {

inline std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace detail

// INI file with [data], [lexicons], [run], [features], [lda], [logistic],
// [gbt] and [mlp] sections. Relative paths are taken relative to the file.
inline PipelineConfig load_config(const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  PipelineConfig c;
  try {
    // Present but unparseable values throw instead of falling back.
    auto val = [&](const char* key, auto def) {
      using T = decltype(def);
      if (!tree.get_child_optional(key)) return def;
      return tree.get<T>(key);
    };
    auto str = [&](const char* key, const std::string& def) {
      return detail::resolve_path(base, tree.get<std::string>(key, def));
    };
    c.dataset = str("data.dataset", "");
    c.cache = str("data.cache", "");
    c.lexicons.stopwords = str("lexicons.stopwords", "");
    c.lexicons.emotion = str("lexicons.emotion", "");
    c.lexicons.emoji = str("lexicons.emoji", "");
    c.lexicons.categories = str("lexicons.categories", "");
    c.lexicons.depression_terms = str("lexicons.depression_terms", "");
    c.out = str("run.out", "out");
    c.offline = val("run.offline", c.offline);
    c.seed = val("run.seed", c.seed);
    c.min_words = val("run.min_words", c.min_words);
    const auto folds = val("run.folds", std::size_t{5});
    const auto holdout = val("run.holdout", 0.0);
    c.scheme = holdout > 0 ? SplitScheme::holdout(holdout) : SplitScheme::kfold(folds);
    c.drop = tree.get<std::string>("run.drop", "");
    c.grid = str("run.grid", "");

    auto& f = c.features;
    f.visual_dim = val("features.visual_dim", f.visual_dim);
    f.lexicon_pca = val("features.lexicon_pca", f.lexicon_pca);
    const auto mode = tree.get<std::string>("features.count_mode", "normalized");
    if (mode != "normalized" && mode != "raw") throw ConfigError("count_mode must be normalized or raw");
    f.count_mode = mode == "raw" ? CountMode::raw : CountMode::normalized;
    f.standardize_activity = val("features.standardize_activity", f.standardize_activity);
    f.lda_depressed_only = val("features.lda_depressed_only", f.lda_depressed_only);
    f.window_days = val("features.window_days", f.window_days);
    f.lda.topics = val("lda.topics", f.lda.topics);
    f.lda.alpha = val("lda.alpha", f.lda.alpha);
    f.lda.eta = val("lda.eta", f.lda.eta);
    f.lda.iterations = val("lda.iterations", f.lda.iterations);
    f.fold_iterations = val("lda.fold_iterations", f.fold_iterations);

    auto& l = c.models.logistic;
    l.C = val("logistic.C", l.C);
    l.tol = val("logistic.tol", l.tol);
    l.max_iter = val("logistic.max_iter", l.max_iter);
    auto& g = c.models.gbt;
    g.rounds = val("gbt.rounds", g.rounds);
    g.max_depth = val("gbt.max_depth", g.max_depth);
    g.learning_rate = val("gbt.learning_rate", g.learning_rate);
    g.gamma = val("gbt.gamma", g.gamma);
    g.reg_lambda = val("gbt.reg_lambda", g.reg_lambda);
    g.scale_pos_weight = val("gbt.scale_pos_weight", g.scale_pos_weight);
    auto& m = c.models.mlp;
    m.batch_size = val("mlp.batch_size", m.batch_size);
    m.learning_rate = val("mlp.learning_rate", m.learning_rate);
    m.dropout = val("mlp.dropout", m.dropout);
    m.epochs = val("mlp.epochs", m.epochs);
    m.validation_fraction = val("mlp.validation_fraction", m.validation_fraction);
    m.patience = val("mlp.patience", m.patience);
  } catch (const pt::ptree_bad_data& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

}  // namespace mfel
