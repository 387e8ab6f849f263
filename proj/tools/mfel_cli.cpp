#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "mfel/http_transport.hpp"
#include "mfel/pipeline.hpp"
#include "mfel/synth.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string dataset;
  std::string cache;
  std::string out;
  std::string grid;
  std::string drop;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  double holdout = 0.0;
  bool offline = false;
  bool online = false;
};

mfel::PipelineConfig resolve(const Overrides& o, CLI::App& app) {
  mfel::PipelineConfig cfg;
  if (!o.config.empty()) cfg = mfel::load_config(o.config);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (!o.cache.empty()) cfg.cache = o.cache;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.grid.empty()) cfg.grid = o.grid;
  if (app.count("--drop")) cfg.drop = o.drop;
  if (app.count("--seed")) cfg.seed = o.seed;
  if (app.count("--folds")) cfg.scheme = mfel::SplitScheme::kfold(o.folds);
  if (app.count("--holdout")) cfg.scheme = mfel::SplitScheme::holdout(o.holdout);
  if (o.offline) cfg.offline = true;
  if (o.online) cfg.offline = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal depression-detection pipeline"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--dataset", o.dataset, "user JSONL dataset");
  app.add_option("--cache", o.cache, "URL title cache (JSON)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--folds", o.folds, "stratified k-fold cross-validation");
  app.add_option("--holdout", o.holdout, "stratified holdout test fraction");
  app.add_option("--grid", o.grid, "grid file for gridsearch");
  app.add_option("--drop", o.drop, "modalities to leave out (letters from vtedu)");
  auto* off = app.add_flag("--offline", o.offline, "never touch the network");
  app.add_flag("--online", o.online, "allow fetching uncached titles")->excludes(off);

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  auto* fetch = app.add_subcommand("fetch-titles", "resolve page titles for tweet URLs");
  auto* featurize = app.add_subcommand("featurize", "write the feature matrix and manifest");
  auto* train = app.add_subcommand("train", "train the ensemble on featurized data");
  auto* evaluate = app.add_subcommand("evaluate", "cross-validated base models and ensemble");
  auto* ablate = app.add_subcommand("ablate", "leave-one-modality-out table");
  auto* gridsearch = app.add_subcommand("gridsearch", "exhaustive hyperparameter search");
  auto* generate = app.add_subcommand("generate", "write a planted-signal synthetic corpus");
  std::size_t gen_users = 200;
  double gen_shift = 3.0;
  std::string gen_keywords;
  generate->add_option("--users", gen_users, "number of users");
  generate->add_option("--visual-shift", gen_shift, "embedding shift for depressed users");
  generate->add_option("--keywords", gen_keywords, "depression keyword list")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = resolve(o, app);
    if (stats->parsed()) {
      std::cout << mfel::cmd_stats(cfg).to_text();
    } else if (fetch->parsed()) {
      const auto s = mfel::cmd_fetch_titles(cfg, mfel::httplib_get);
      std::cout << "distinct urls: " << s.distinct_urls << "\nresolved: " << s.resolved
                << "\nfailed: " << s.failed << "\noffline misses: " << s.offline_misses.size() << "\n";
      for (const auto& url : s.offline_misses) std::cout << "  " << url << "\n";
    } else if (featurize->parsed()) {
      const auto r = mfel::cmd_featurize(cfg);
      std::cout << "features: " << r.matrix.X.rows() << " x " << r.matrix.X.cols() << "\n";
    } else if (train->parsed()) {
      const auto m = mfel::cmd_train(cfg);
      std::cout << "model bundle written (" << m.gbt.trees.size() << " trees, "
                << m.mlp.train_loss.size() << " epochs)\n";
    } else if (evaluate->parsed()) {
      std::cout << mfel::cmd_evaluate(cfg).to_text();
    } else if (ablate->parsed()) {
      std::cout << mfel::cmd_ablate(cfg).to_text();
    } else if (gridsearch->parsed()) {
      std::cout << mfel::cmd_gridsearch(cfg).to_text();
    } else if (generate->parsed()) {
      mfel::synth::SynthConfig sc;
      sc.users = gen_users;
      sc.visual_shift = gen_shift;
      sc.seed = cfg.seed;
      sc.keywords = mfel::synth::load_keywords(gen_keywords);
      const auto corpus = mfel::synth::generate(sc);
      mfel::write_dataset(corpus.dataset, mfel::out_path(cfg, "synthetic_users.jsonl"));
      corpus.cache.save(mfel::out_path(cfg, "synthetic_title_cache.json"));
      std::cout << "wrote " << corpus.dataset.users.size() << " users to " << cfg.out << "\n";
    }
  } catch (const mfel::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
