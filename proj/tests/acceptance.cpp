// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "mfel/pipeline.hpp"
#include "mfel/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mfel;
using testing_support::data_path;
using testing_support::TempDir;

namespace {

// Empty string = pass, otherwise the reason.
using Check = std::function<std::string()>;

int failures = 0;

void criterion(int n, const std::string& name, double limit_s, const Check& check) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string reason;
  try {
    reason = check();
  } catch (const std::exception& e) {
    reason = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (reason.empty() && limit_s > 0 && secs >= limit_s) {
    std::ostringstream os;
    os << "took " << secs << " s, limit " << limit_s << " s";
    reason = os.str();
  }
  char timing[32];
  std::snprintf(timing, sizeof timing, " (%.2f s)", secs);
  if (reason.empty()) {
    std::cout << "PASS criterion " << n << ": " << name << timing << std::endl;
  } else {
    ++failures;
    std::cout << "FAIL criterion " << n << ": " << name << timing << ": " << reason << std::endl;
  }
}

std::string fmt(const char* f, double a, double b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::vector<TokenDoc> planted_corpus(std::size_t docs, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenDoc> corpus;
  for (std::size_t d = 0; d < docs; ++d) {
    const char prefix = d % 2 == 0 ? 'a' : 'b';
    TokenDoc doc;
    for (std::size_t i = 0; i < len; ++i) doc.push_back(prefix + std::to_string(rng.below(50)));
    corpus.push_back(doc);
  }
  return corpus;
}

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  return X;
}

std::vector<int> coin_labels(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(2));
  y[0] = 0;
  y[1] = 1;
  return y;
}

// ---------------------------------------------------------------------------

std::string metric_identities() {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      p[i] = static_cast<int>(rng.below(2));
    }
    const auto t = oracle::tally(y, p);
    const auto c = confusion(y, p);
    if (c.tp != static_cast<std::size_t>(t.tp) || c.tn != static_cast<std::size_t>(t.tn) ||
        c.fp != static_cast<std::size_t>(t.fp) || c.fn != static_cast<std::size_t>(t.fn))
      return "confusion counts differ from tally in trial " + std::to_string(trial);
    const auto m = metrics(c);
    const auto r = oracle::ratios(t);
    const double worst = std::max({std::abs(m.accuracy - r.accuracy), std::abs(m.precision - r.precision),
                                   std::abs(m.recall - r.recall), std::abs(m.f1 - r.f1)});
    if (worst > 1e-12) return fmt("metric deviation %.3g in trial %.0f", worst, trial);
  }
  return "";
}

std::string lda_recovery() {
  const auto corpus = planted_corpus(200, 50, 1);
  LdaParams p;
  p.topics = 2;
  p.alpha = 0.1;
  p.eta = 0.01;
  p.iterations = 500;
  p.seed = 5;
  std::string problem;
  auto observe = [&](std::size_t sweep, const TopicModel& m, const TopicAssignment& a) {
    if (!problem.empty()) return;
    for (const auto& counts : a.doc_topic) {
      const auto phi = topic_proportions(counts, m.alpha);
      if (std::abs(std::accumulate(phi.begin(), phi.end(), 0.0) - 1.0) > 1e-9)
        problem = "document distribution off unit sum at sweep " + std::to_string(sweep);
    }
    for (const auto& row : term_topic_dist(m))
      if (std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) > 1e-9)
        problem = "topic-word distribution off unit sum at sweep " + std::to_string(sweep);
  };
  TopicAssignment state;
  const auto model = fit_lda(corpus, p, &state, observe);
  if (!problem.empty()) return problem;
  std::size_t confident = 0;
  for (const auto& counts : state.doc_topic) {
    const auto phi = topic_proportions(counts, model.alpha);
    confident += *std::max_element(phi.begin(), phi.end()) > 0.9;
  }
  if (confident < 190) return std::to_string(confident) + " of 200 documents confident, need 190";
  return "";
}

std::string count_conservation() {
  std::vector<std::vector<TokenDoc>> corpora = {planted_corpus(60, 25, 2)};
  Rng rng(3);
  std::vector<TokenDoc> ragged;
  for (int d = 0; d < 80; ++d) {
    TokenDoc doc;
    const auto len = rng.below(40);
    for (std::size_t i = 0; i < len; ++i) doc.push_back("w" + std::to_string(rng.below(120)));
    ragged.push_back(doc);
  }
  corpora.push_back(ragged);
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    const auto& corpus = corpora[c];
    std::int64_t tokens = 0;
    for (const auto& d : corpus) tokens += static_cast<std::int64_t>(d.size());
    std::string problem;
    auto observe = [&](std::size_t sweep, const TopicModel& m, const TopicAssignment&) {
      std::int64_t total = 0;
      for (auto v : m.topic_word) total += v;
      if (total != tokens && problem.empty())
        problem = "corpus " + std::to_string(c) + " sweep " + std::to_string(sweep) + ": " +
                  std::to_string(total) + " != " + std::to_string(tokens);
    };
    LdaParams p;
    p.topics = c == 0 ? 2 : 5;
    p.iterations = 100;
    p.seed = 9;
    fit_lda(corpus, p, nullptr, observe);
    if (!problem.empty()) return problem;
  }
  return "";
}

std::string logistic_gradient_check() {
  const auto X = gaussian(80, 12, 4);
  const auto y = coin_labels(80, 5);
  Rng rng(6);
  Eigen::VectorXd w(12);
  for (auto& v : w) v = rng.normal();
  double b = rng.normal();
  Eigen::VectorXd gw;
  double gb;
  ml::logistic_gradient(X, y, w, b, 10.0, gw, gb);
  std::function<double()> f = [&] { return ml::logistic_objective(X, y, w, b, 10.0); };
  double worst = oracle::relative_error(gb, oracle::central_difference(f, b, 1e-5));
  for (Eigen::Index j = 0; j < w.size(); ++j)
    worst = std::max(worst, oracle::relative_error(gw(j), oracle::central_difference(f, w(j), 1e-5)));
  return worst < 1e-6 ? "" : fmt("max relative error %.3g", worst);
}

std::string mlp_gradient_check() {
  const auto X = gaussian(16, 10, 7);
  const auto y = coin_labels(16, 8);
  ml::MlpParams p;
  p.hidden = {24, 12, 6};
  Rng rng(9);
  auto m = ml::init_mlp(10, p, rng);
  ml::visit_parameters(m, [&](double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] += rng.normal(0, 0.3);
  });
  const auto grad = ml::mlp_batch_gradient(m, X, y);
  std::vector<double*> params;
  std::vector<double> analytic;
  ml::visit_parameters(m, [&](double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) params.push_back(v + i);
  });
  ml::visit_parameters(grad, [&](const double* v, std::size_t n) { analytic.insert(analytic.end(), v, v + n); });
  std::function<double()> f = [&] { return ml::mlp_batch_loss(m, X, y); };
  double worst = 0;
  for (std::size_t k = 0; k < params.size(); ++k)
    worst = std::max(worst, oracle::relative_error(analytic[k], oracle::central_difference(f, *params[k], 1e-6)));
  return worst < 1e-4 ? "" : fmt("max relative error %.3g over %.0f parameters", worst, static_cast<double>(params.size()));
}

std::string pca_oracle() {
  const auto X = gaussian(50, 194, 10);
  const auto m = fit_pca(X, 194);
  oracle::Dense rows(50, std::vector<double>(194));
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 194; ++j) rows[i][j] = X(i, j);
  const auto ev = oracle::jacobi_eigenvalues(oracle::covariance(rows));
  for (int k = 0; k < 194; ++k) {
    // 50 rows give rank 49; the tail is compared against the top eigenvalue.
    const double scale = k < 49 ? ev[k] : ev[0];
    const double rel = std::abs(m.explained_variance(k) - std::max(0.0, ev[k])) / scale;
    if (rel > 1e-8) return fmt("eigenvalue %.0f off by %.3g relative", k, rel);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k : {1u, 10u, 90u, 194u}) {
    const auto mk = fit_pca(X, k);
    double err = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Eigen::VectorXd x = X.row(i).transpose();
      err += (reconstruct(mk, transform(mk, x)) - x).squaredNorm();
    }
    if (err > prev + 1e-9) return fmt("reconstruction error rises at k=%.0f", static_cast<double>(k));
    prev = err;
  }
  return "";
}

std::string gbt_capability() {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> y = {0, 1, 1, 0};
  for (std::size_t depth : {2u, 3u, 8u}) {
    ml::GbtParams p;
    p.max_depth = depth;
    p.rounds = 10;
    const auto m = ml::train_gbt(X, y, p);
    if (m.trees.size() > 10) return "more than 10 rounds";
    for (int i = 0; i < 4; ++i)
      if ((ml::predict_gbt(m, X.row(i).transpose()) >= 0.5 ? 1 : 0) != y[static_cast<std::size_t>(i)])
        return fmt("XOR point %.0f misclassified at depth %.0f", i, static_cast<double>(depth));
  }
  ml::GbtParams p;
  p.gamma = std::numeric_limits<double>::infinity();
  const auto Xr = gaussian(50, 3, 11);
  const auto yr = coin_labels(50, 12);
  const auto m = ml::train_gbt(Xr, yr, p);
  const double first = ml::predict_gbt(m, Xr.row(0).transpose());
  for (Eigen::Index i = 0; i < Xr.rows(); ++i)
    if (ml::predict_gbt(m, Xr.row(i).transpose()) != first) return "gamma=inf model is not constant";
  return "";
}

std::string vote_rule() {
  for (int mask = 0; mask < 8; ++mask) {
    const std::array<int, 3> v = {mask & 1, (mask >> 1) & 1, (mask >> 2) & 1};
    const int ones = v[0] + v[1] + v[2];
    const int mode = ones > 3 - ones ? 1 : 0;
    if (ml::ensemble_vote(v) != mode) return "triple " + std::to_string(mask) + " disagrees with the mode";
  }
  return "";
}

std::string planted_signal() {
  synth::SynthConfig sc;
  sc.users = 200;
  sc.visual_shift = 3.0;
  sc.seed = 42;
  sc.keywords = synth::load_keywords(data_path("depression_terms.txt"));
  const auto corpus = synth::generate(sc);
  const auto lx = load_lexicons(testing_support::bundled_lexicons());
  ExperimentConfig cfg;
  cfg.seed = 42;
  const auto users = prepare_users(prepare_dataset(corpus.dataset, corpus.cache, lx.stopwords, 5), lx, cfg.features);
  const auto ff = featurize_experiment(users, cfg);
  const auto report = report_from_folds(ff, cfg);
  const auto ablation = ablation_from_folds(ff, cfg);
  std::cout << report.to_text() << ablation.to_text();
  const double acc = report.row("MFEL").mean.accuracy;
  if (acc < 0.90) return fmt("ensemble accuracy %.4f < 0.90", acc);
  const double full = ablation.rows.back().mean.accuracy;
  for (std::size_t i = 0; i + 1 < ablation.rows.size(); ++i)
    if (ablation.rows[i].mean.accuracy > full)
      return ablation.rows[i].name + fmt(" scores %.4f above the full model's %.4f", ablation.rows[i].mean.accuracy, full);
  return "";
}

std::string determinism() {
  TempDir a("accept-a"), b("accept-b");
  auto run = [](const TempDir& dir) {
    auto cfg = testing_support::fixture_config(dir.file("out"));
    std::filesystem::copy_file(cfg.cache, dir.file("cache.json"));
    cfg.cache = dir.file("cache.json");
    testing_support::CountingTransport t;
    cmd_fetch_titles(cfg, t);
    cmd_featurize(cfg);
    cmd_train(cfg);
    cmd_evaluate(cfg);
    cmd_ablate(cfg);
  };
  run(a);
  run(b);
  for (const char* name : {"features.tsv", "featurizer.json", "manifest.json", "model.json", "report.txt",
                           "report.json", "ablation.txt", "ablation.json", "fetch_summary.json"}) {
    const auto fa = read_file(a.file(std::string("out/") + name));
    const auto fb = read_file(b.file(std::string("out/") + name));
    if (fa != fb) return std::string(name) + " differs between runs";
  }
  return "";
}

std::string offline_safety() {
  TempDir dir("accept-offline");
  auto cfg = testing_support::fixture_config(dir.file("out"));
  std::filesystem::copy_file(cfg.cache, dir.file("cache.json"));
  cfg.cache = dir.file("cache.json");
  if (!cfg.offline) return "fixture config is not offline";
  testing_support::CountingTransport t;
  const auto s = cmd_fetch_titles(cfg, t);
  if (!s.offline_misses.empty()) return std::to_string(s.offline_misses.size()) + " URLs missing from the fixture cache";
  // Every fetch path: cached hits, a cold cache, a single lookup.
  std::filesystem::remove(cfg.cache);
  cmd_fetch_titles(cfg, t);
  UrlTitleCache cache;
  FetchPolicy policy;
  policy.offline = true;
  try {
    fetch_title("https://never.example/x", cache, policy, t, system_now);
  } catch (const OfflineCacheMiss&) {
  }
  cmd_featurize(testing_support::fixture_config(dir.file("out2")));
  if (*t.calls != 0) return std::to_string(t.calls->load()) + " network calls recorded";
  return "";
}

}  // namespace

int main() {
  criterion(1, "metric identities against a tally oracle", 1.0, metric_identities);
  criterion(2, "LDA recovers two planted topics", 30.0, lda_recovery);
  criterion(3, "Gibbs sweeps conserve token counts", 0, count_conservation);
  criterion(4, "logistic gradient matches central differences", 10.0, logistic_gradient_check);
  criterion(4, "MLP backprop matches central differences", 10.0, mlp_gradient_check);
  criterion(5, "PCA against a Jacobi eigenvalue oracle", 0, pca_oracle);
  criterion(6, "boosted trees solve XOR; infinite gamma is constant", 0, gbt_capability);
  criterion(7, "majority vote over all 8 triples", 0, vote_rule);
  criterion(8, "planted-signal corpus: accuracy and ablation ordering", 300.0, planted_signal);
  criterion(9, "two full runs are byte-identical", 0, determinism);
  criterion(10, "offline runs make no network calls", 0, offline_safety);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
