#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "mfel/eval.hpp"
#include "mfel/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mfel;

namespace {

const Lexicons& bundled() {
  static const Lexicons lx = load_lexicons(testing_support::bundled_lexicons());
  return lx;
}

PreparedUsers synthetic_users(const synth::SynthConfig& sc, const FeatureConfig& fc) {
  const auto corpus = synth::generate(sc);
  const auto prepared = prepare_dataset(corpus.dataset, corpus.cache, bundled().stopwords, 5);
  return prepare_users(prepared, bundled(), fc);
}

ExperimentConfig quick_experiment() {
  ExperimentConfig e;
  e.features.lda.iterations = 50;
  e.models.mlp.epochs = 40;
  e.seed = 3;
  return e;
}

std::vector<int> balanced_labels(std::size_t per_class) {
  std::vector<int> y;
  for (std::size_t i = 0; i < per_class; ++i) {
    y.push_back(1);
    y.push_back(0);
  }
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// Confusion counts and metrics

TEST(Confusion, HandExample) {
  const std::vector<int> y = {1, 1, 0, 0, 1, 0};
  const std::vector<int> p = {1, 0, 0, 1, 1, 0};
  EXPECT_EQ(confusion(y, p), (ConfusionCounts{2, 2, 1, 1}));
  const auto m = metrics(confusion(y, p));
  EXPECT_DOUBLE_EQ(m.accuracy, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
}

TEST(Confusion, MatchesTallyOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> y(1000), p(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      p[i] = static_cast<int>(rng.below(2));
    }
    const auto c = confusion(y, p);
    const auto t = oracle::tally(y, p);
    EXPECT_EQ(c.tp, static_cast<std::size_t>(t.tp));
    EXPECT_EQ(c.tn, static_cast<std::size_t>(t.tn));
    EXPECT_EQ(c.fp, static_cast<std::size_t>(t.fp));
    EXPECT_EQ(c.fn, static_cast<std::size_t>(t.fn));
    EXPECT_EQ(c.total(), 1000u);
    const auto m = metrics(c);
    const auto r = oracle::ratios(t);
    EXPECT_NEAR(m.accuracy, r.accuracy, 1e-15);
    EXPECT_NEAR(m.precision, r.precision, 1e-15);
    EXPECT_NEAR(m.recall, r.recall, 1e-15);
    EXPECT_NEAR(m.f1, r.f1, 1e-12);
  }
}

TEST(Confusion, Errors) {
  EXPECT_THROW(confusion(std::vector<int>{1, 0}, std::vector<int>{1}), LengthMismatch);
  EXPECT_THROW(confusion(std::vector<int>{2}, std::vector<int>{1}), NonBinaryLabel);
  EXPECT_THROW(confusion(std::vector<int>{1}, std::vector<int>{-1}), NonBinaryLabel);
  EXPECT_THROW(metrics(ConfusionCounts{}), EmptyPopulation);
}

TEST(Metrics, DegenerateDenominators) {
  // Nothing predicted positive and no positives present.
  const auto m = metrics(ConfusionCounts{0, 5, 0, 0});
  EXPECT_TRUE(m.precision_degenerate);
  EXPECT_TRUE(m.recall_degenerate);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.accuracy, 1.0);
  // Positives present, none predicted.
  const auto n = metrics(ConfusionCounts{0, 3, 0, 2});
  EXPECT_TRUE(n.precision_degenerate);
  EXPECT_FALSE(n.recall_degenerate);
  EXPECT_EQ(n.recall, 0.0);
}

TEST(Metrics, AccuracyInvariantUnderLabelFlip) {
  Rng rng(2);
  std::vector<int> y(300), p(300), yf(300), pf(300);
  for (std::size_t i = 0; i < 300; ++i) {
    y[i] = static_cast<int>(rng.below(2));
    p[i] = static_cast<int>(rng.below(2));
    yf[i] = 1 - y[i];
    pf[i] = 1 - p[i];
  }
  EXPECT_DOUBLE_EQ(metrics(confusion(y, p)).accuracy, metrics(confusion(yf, pf)).accuracy);
  for (const auto& m : {metrics(confusion(y, p)), metrics(confusion(yf, pf))}) {
    for (double v : {m.accuracy, m.precision, m.recall, m.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(ReportRow, FoldAveragedMetricsAndSummedCounts) {
  const auto r = make_row("x", {ConfusionCounts{1, 1, 0, 0}, ConfusionCounts{0, 1, 1, 0}});
  EXPECT_EQ(r.counts, (ConfusionCounts{1, 2, 1, 0}));
  EXPECT_DOUBLE_EQ(r.mean.accuracy, (1.0 + 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(r.mean.precision, 0.5);
  EXPECT_FALSE(r.mean.precision_degenerate);
  EXPECT_TRUE(r.mean.recall_degenerate);
}

// ---------------------------------------------------------------------------
// Splits

TEST(Split, HoldoutIsStratified) {
  const auto y = balanced_labels(50);
  const auto folds = split(y, SplitScheme::holdout(0.2), 7);
  ASSERT_EQ(folds.size(), 1u);
  const auto& f = folds[0];
  std::size_t pos = 0;
  for (auto i : f.test) pos += y[i] == 1;
  EXPECT_EQ(f.test.size(), 20u);
  EXPECT_EQ(pos, 10u);
  EXPECT_EQ(f.train.size(), 80u);
}

TEST(Split, KFoldPartitionsAndStratifies) {
  std::vector<int> y(37, 0);
  for (std::size_t i = 0; i < 14; ++i) y[i * 2] = 1;
  const auto folds = split(y, SplitScheme::kfold(5), 8);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<int> seen(y.size(), 0);
  std::size_t min_size = y.size(), max_size = 0;
  for (const auto& f : folds) {
    EXPECT_EQ(f.train.size() + f.test.size(), y.size());
    std::set<std::size_t> test(f.test.begin(), f.test.end());
    for (auto i : f.train) EXPECT_FALSE(test.count(i));
    for (auto i : f.test) ++seen[i];
    min_size = std::min(min_size, f.test.size());
    max_size = std::max(max_size, f.test.size());
    std::size_t pos = 0;
    for (auto i : f.test) pos += y[i] == 1;
    EXPECT_TRUE(pos == 2 || pos == 3);
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_LE(max_size - min_size, 1u);
}

TEST(Split, DeterministicGivenSeed) {
  const auto y = balanced_labels(30);
  EXPECT_EQ(split(y, SplitScheme::kfold(5), 4), split(y, SplitScheme::kfold(5), 4));
  EXPECT_NE(split(y, SplitScheme::kfold(5), 4), split(y, SplitScheme::kfold(5), 5));
}

TEST(Split, Errors) {
  EXPECT_THROW(split(std::vector<int>{1, 1, 1}, SplitScheme::kfold(2), 0), SingleClass);
  EXPECT_THROW(split(balanced_labels(3), SplitScheme::kfold(4), 0), FoldTooSmall);
  EXPECT_THROW(split(balanced_labels(3), SplitScheme::kfold(1), 0), FoldTooSmall);
  EXPECT_THROW(split(balanced_labels(2), SplitScheme::holdout(0.1), 0), FoldTooSmall);
}

// ---------------------------------------------------------------------------
// Grid search

TEST(GridSearch, ExpansionAndErrors) {
  EXPECT_THROW(expand_grid({}), EmptyGrid);
  EXPECT_THROW(expand_grid({{"a", {}}}), EmptyGrid);
  const auto pts = expand_grid({{"a", {1, 2}}, {"b", {3, 4, 5}}});
  EXPECT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts.front(), (ParamPoint{{"a", 1}, {"b", 3}}));
  EXPECT_EQ(grid_from_json(nlohmann::json::parse(R"({"x": 2, "y": [1, 3]})")),
            (ParamGrid{{"x", {2}}, {"y", {1, 3}}}));
  EXPECT_THROW(with_params({}, "gbt", {{"nope", 1}}), ConfigError);
  EXPECT_THROW(with_params({}, "ensemble", {{"max_depth", 1}}), ConfigError);
  EXPECT_EQ(with_params({}, "ensemble", {{"gbt.max_depth", 3}}).gbt.max_depth, 3u);
}

TEST(GridSearch, SingletonGridMatchesDirectScore) {
  Rng rng(9);
  Eigen::MatrixXd X(60, 3);
  std::vector<int> y(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    y[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
    for (Eigen::Index j = 0; j < 3; ++j) X(i, j) = rng.normal() + (i % 2 ? 1.0 : -1.0);
  }
  const auto g = grid_search(X, y, "logistic", {{"C", {10.0}}}, SplitScheme::kfold(5), 1);
  ASSERT_EQ(g.rows.size(), 1u);
  EXPECT_EQ(g.best, 0u);
  const auto folds = matrix_folds(X, y, split(y, SplitScheme::kfold(5), derive_seed(1, "split")));
  const auto direct = score_model(folds, "logistic", {}, 1);
  EXPECT_EQ(g.rows[0].result.counts, direct.counts);
}

TEST(GridSearch, PrefersDeeperTreesOnXor) {
  Rng rng(10);
  Eigen::MatrixXd X(160, 2);
  std::vector<int> y(160);
  for (Eigen::Index i = 0; i < 160; ++i) {
    const int a = static_cast<int>(i % 2), b = static_cast<int>((i / 2) % 2);
    X(i, 0) = a + rng.normal(0, 0.1);
    X(i, 1) = b + rng.normal(0, 0.1);
    y[static_cast<std::size_t>(i)] = a ^ b;
  }
  const ParamGrid grid = {{"learning_rate", {0.2}}, {"max_depth", {1, 8}}};
  const auto g = grid_search(X, y, "gbt", grid, SplitScheme::kfold(5), 2);
  EXPECT_EQ(g.rows.size(), 2u);
  EXPECT_GE(g.best_params().at("max_depth"), 2.0);
  EXPECT_GT(g.rows[g.best].result.mean.accuracy, g.rows[1 - g.best].result.mean.accuracy);
  EXPECT_THROW(grid_search(X, y, "gbt", ParamGrid{}, SplitScheme::kfold(5), 2), EmptyGrid);
}

// ---------------------------------------------------------------------------
// Experiments on planted synthetic corpora

TEST(Experiment, ReportRowsAndDeterminism) {
  synth::SynthConfig sc;
  sc.users = 60;
  sc.keywords = synth::load_keywords(testing_support::data_path("depression_terms.txt"));
  auto cfg = quick_experiment();
  const auto users = synthetic_users(sc, cfg.features);
  const auto a = run_experiment(users, cfg);
  ASSERT_EQ(a.rows.size(), 4u);
  EXPECT_EQ(a.rows[0].name, "LR");
  EXPECT_EQ(a.rows[3].name, "MFEL");
  for (const auto& r : a.rows) {
    EXPECT_EQ(r.fold_counts.size(), 5u);
    EXPECT_EQ(r.counts.total(), 60u);
  }
  const auto b = run_experiment(users, cfg);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_NE(a.to_text().find("seed: 3"), std::string::npos);
}

TEST(Experiment, AblationSuiteRowsAndFullModel) {
  synth::SynthConfig sc;
  sc.users = 60;
  sc.visual_shift = 3.0;
  sc.keywords = synth::load_keywords(testing_support::data_path("depression_terms.txt"));
  auto cfg = quick_experiment();
  const auto users = synthetic_users(sc, cfg.features);
  const auto ab = ablation_suite(users, cfg);
  const std::vector<std::string> names = {"MFEL (t+e+d+u)", "MFEL (v+e+d+u)", "MFEL (v+t+d+u)",
                                          "MFEL (v+t+e+u)", "MFEL (v+t+e+d)", "MFEL (v+t+e+d+u)"};
  ASSERT_EQ(ab.rows.size(), names.size());
  for (std::size_t i = 0; i < names.size(); ++i) EXPECT_EQ(ab.rows[i].name, names[i]);
  const auto full = run_experiment(users, cfg);
  EXPECT_EQ(ab.rows.back().fold_counts, full.row("MFEL").fold_counts);
}

// Only the images carry the label: removing them leaves chance accuracy.
TEST(Experiment, VisualOnlySignal) {
  synth::SynthConfig sc;
  sc.users = 160;
  sc.text_signal = false;
  sc.visual_shift = 3.0;
  sc.seed = 11;
  auto cfg = quick_experiment();
  const auto users = synthetic_users(sc, cfg.features);
  const auto ab = ablation_suite(users, cfg);
  EXPECT_GE(ab.row("MFEL (v+t+e+d+u)").mean.accuracy, 0.9);
  EXPECT_NEAR(ab.row("MFEL (t+e+d+u)").mean.accuracy, 0.5, 0.1);
}
