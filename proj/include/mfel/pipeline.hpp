#pragma once

#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/config.hpp"
#include "mfel/corpus.hpp"
#include "mfel/eval.hpp"
#include "mfel/features.hpp"
#include "mfel/ml/ensemble.hpp"
#include "mfel/webcontext.hpp"

// Pipeline stages. Each stage reads its inputs from disk, writes its
// artifacts under config.out, and stamps them with the seed and the config
// fingerprint.
namespace mfel {

struct StageInputs {
  LabeledDataset raw;
  UrlTitleCache cache;
  Lexicons lexicons;
  LabeledDataset prepared;
  PreparedUsers users;
};

inline UrlTitleCache load_cache_if_present(const std::string& path) {
  if (path.empty() || !std::filesystem::exists(path)) return {};
  return UrlTitleCache::load(path);
}

inline StageInputs load_inputs(const PipelineConfig& cfg) {
  cfg.validate();
  StageInputs in;
  in.raw = load_dataset(cfg.dataset);
  in.cache = load_cache_if_present(cfg.cache);
  in.lexicons = load_lexicons(cfg.lexicons);
  in.prepared = prepare_dataset(in.raw, in.cache, in.lexicons.stopwords, cfg.min_words);
  in.users = prepare_users(in.prepared, in.lexicons, cfg.features);
  return in;
}

inline std::string out_path(const PipelineConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  return (std::filesystem::path(cfg.out) / name).string();
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_file(path, j.dump(1) + "\n");
}

inline nlohmann::json stamp(const PipelineConfig& cfg) {
  return {{"seed", cfg.seed}, {"config_fingerprint", cfg.fingerprint()}};
}

// Rows the standalone featurize/train stages fit on: the training side of
// the holdout split, or every user under cross-validation.
inline std::vector<std::size_t> training_rows(const PipelineConfig& cfg, std::span<const int> labels) {
  if (cfg.scheme.kind == SplitScheme::Kind::holdout)
    return stratified_holdout(labels, cfg.scheme.test_fraction, derive_seed(cfg.seed, "split")).train;
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

inline StatsReport cmd_stats(const PipelineConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset path given");
  const auto ds = load_dataset(cfg.dataset);
  const auto report = dataset_stats(ds);
  write_file(out_path(cfg, "stats.txt"), report.to_text());
  auto j = report.to_json();
  j.update(stamp(cfg));
  write_json(out_path(cfg, "stats.json"), j);
  return report;
}

inline FetchSummary cmd_fetch_titles(const PipelineConfig& cfg, const HttpTransport& transport,
                                     const Clock& now = system_now) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset path given");
  if (cfg.cache.empty()) throw ConfigError("no title cache path given");
  const auto ds = load_dataset(cfg.dataset);
  auto cache = load_cache_if_present(cfg.cache);
  FetchPolicy policy;
  policy.offline = cfg.offline;
  const auto summary = fetch_all_titles(ds, cache, policy, transport, now);
  cache.save(cfg.cache);
  nlohmann::json j = {{"distinct_urls", summary.distinct_urls},
                      {"resolved", summary.resolved},
                      {"failed", summary.failed},
                      {"offline_misses", summary.offline_misses}};
  j.update(stamp(cfg));
  write_json(out_path(cfg, "fetch_summary.json"), j);
  return summary;
}

struct FeaturizeResult {
  FeatureMatrix matrix;
  nlohmann::json manifest;
};

inline FeaturizeResult cmd_featurize(const PipelineConfig& cfg) {
  const auto in = load_inputs(cfg);
  const auto rows = training_rows(cfg, in.users.labels);
  const auto fz = Featurizer::fit(in.users, rows, cfg.features, cfg.seed);
  FeaturizeResult r;
  r.matrix.user_ids = in.users.user_ids;
  r.matrix.labels = in.users.labels;
  r.matrix.X = fz.transform(in.users);
  r.matrix.layout = fz.layout;
  const auto matrix_path = out_path(cfg, "features.tsv");
  write_matrix(r.matrix, matrix_path);
  write_json(out_path(cfg, "featurizer.json"),
             {{"lda", fz.lda.to_json()}, {"pca", fz.pca.to_json()}, {"activity_scaler", fz.scaler.to_json()}});

  std::vector<std::string> empty_users;
  for (const auto& u : in.prepared.users)
    if (u.no_surviving_tweets) empty_users.push_back(u.user_id);
  r.manifest = {{"matrix", "features.tsv"},
                {"matrix_sha256", file_sha256(matrix_path)},
                {"rows", r.matrix.user_ids.size()},
                {"layout", fz.layout.to_json()},
                {"lexicon_hashes", in.lexicons.file_hashes},
                {"model_fingerprints", fz.model_fingerprints()},
                {"training_rows", rows.size()},
                {"users_without_tweets", empty_users},
                {"dataset_warnings", in.raw.warnings}};
  r.manifest.update(stamp(cfg));
  write_json(out_path(cfg, "manifest.json"), r.manifest);
  return r;
}

inline FeatureMatrix load_featurized(const PipelineConfig& cfg) {
  const auto manifest_path = (std::filesystem::path(cfg.out) / "manifest.json").string();
  if (!std::filesystem::exists(manifest_path))
    throw ConfigError("no feature manifest in " + cfg.out + "; run featurize first");
  const auto manifest = nlohmann::json::parse(read_file(manifest_path));
  const auto layout = FeatureLayout::from_json(manifest.at("layout"));
  const auto matrix_path = (std::filesystem::path(cfg.out) / manifest.at("matrix").get<std::string>()).string();
  if (file_sha256(matrix_path) != manifest.at("matrix_sha256").get<std::string>())
    throw LayoutMismatch("feature matrix does not match its manifest");
  return read_matrix(matrix_path, layout);
}

inline ml::EnsembleModel cmd_train(const PipelineConfig& cfg) {
  const auto m = load_featurized(cfg);
  const auto rows = training_rows(cfg, m.labels);
  const auto drop = parse_modalities(cfg.drop);
  const auto ab = ablate(m.X, m.layout, drop);
  const auto X = take_rows(ab.X, rows);
  const auto y = take(m.labels, rows);
  auto model = ml::train_ensemble(X, y, cfg.models, derive_seed(cfg.seed, "bundle"));
  model.layout_fingerprint = ab.layout.fingerprint();
  model.metadata["layout"] = ab.layout.to_json();
  model.metadata["config_fingerprint"] = cfg.fingerprint();
  model.metadata["seed"] = cfg.seed;
  model.save(out_path(cfg, "model.json"));
  return model;
}

inline void write_report(const PipelineConfig& cfg, const std::string& stem, const std::string& text,
                         const nlohmann::json& j) {
  write_file(out_path(cfg, stem + ".txt"), text);
  write_json(out_path(cfg, stem + ".json"), j);
}

inline EvalReport cmd_evaluate(const PipelineConfig& cfg) {
  const auto in = load_inputs(cfg);
  const auto report = run_experiment(in.users, cfg.experiment());
  write_report(cfg, "report", report.to_text(), report.to_json());
  return report;
}

inline EvalReport cmd_ablate(const PipelineConfig& cfg) {
  const auto in = load_inputs(cfg);
  auto exp = cfg.experiment();
  exp.drop.clear();
  const auto report = ablation_suite(in.users, exp);
  write_report(cfg, "ablation", report.to_text(), report.to_json());
  return report;
}

// Grid file: {"model": "gbt", "params": {"max_depth": [1, 8], ...}}.
inline GridResult cmd_gridsearch(const PipelineConfig& cfg) {
  if (cfg.grid.empty()) throw ConfigError("gridsearch needs a grid file");
  const auto grid_file = nlohmann::json::parse(read_file(cfg.grid));
  const auto model = grid_file.value("model", std::string("gbt"));
  const auto grid = grid_from_json(grid_file.at("params"));
  const auto in = load_inputs(cfg);
  const auto result = grid_search(in.users, model, grid, cfg.experiment());
  write_report(cfg, "grid", result.to_text(), result.to_json());
  return result;
}

}  // namespace mfel
