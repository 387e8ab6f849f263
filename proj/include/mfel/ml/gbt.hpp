#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"
#include "mfel/ml/logistic.hpp"

namespace mfel::ml {

struct GbtParams {
  std::size_t rounds = 200;
  std::size_t max_depth = 8;
  double learning_rate = 0.2;
  double gamma = 0.0;
  double reg_lambda = 0.0;
  double scale_pos_weight = 5.0;
  std::size_t early_stop_rounds = 10;
  double early_stop_tol = 1e-6;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // taken when x[feature] < threshold
  int right = -1;
  double weight = 0.0;
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (nodes.empty()) return 0.0;
    const TreeNode* n = &nodes[0];
    while (!n->is_leaf())
      n = &nodes[static_cast<std::size_t>(x(n->feature) < n->threshold ? n->left : n->right)];
    return n->weight;
  }

  std::size_t depth() const {
    if (nodes.empty()) return 0;
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [id, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      const auto& n = nodes[static_cast<std::size_t>(id)];
      if (!n.is_leaf()) {
        stack.push_back({n.left, d + 1});
        stack.push_back({n.right, d + 1});
      }
    }
    return best;
  }

  std::size_t split_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
  }

  bool operator==(const RegressionTree&) const = default;
};

struct GbtModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.2;
  std::size_t max_depth = 8;
  double gamma = 0.0;
  double reg_lambda = 0.0;
  double scale_pos_weight = 5.0;
  double base_score = 0.0;  // log-odds
  std::size_t input_dim = 0;
  std::vector<double> history;  // weighted training loss, before round 1 and after each round

  bool operator==(const GbtModel&) const = default;

  nlohmann::json to_json() const {
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& t : trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.weight, n.gain});
      jt.push_back(std::move(nodes));
    }
    // gamma may be +inf, which JSON cannot carry as a number.
    nlohmann::json g = std::isinf(gamma) ? nlohmann::json("inf") : nlohmann::json(gamma);
    return {{"trees", jt},
            {"learning_rate", learning_rate},
            {"max_depth", max_depth},
            {"gamma", g},
            {"reg_lambda", reg_lambda},
            {"scale_pos_weight", scale_pos_weight},
            {"base_score", base_score},
            {"input_dim", input_dim},
            {"history", history}};
  }

  static GbtModel from_json(const nlohmann::json& j) {
    GbtModel m;
    for (const auto& jt : j.at("trees")) {
      RegressionTree t;
      for (const auto& n : jt)
        t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                           n.at(3).get<int>(), n.at(4).get<double>(), n.at(5).get<double>()});
      m.trees.push_back(std::move(t));
    }
    m.learning_rate = j.at("learning_rate").get<double>();
    m.max_depth = j.at("max_depth").get<std::size_t>();
    const auto& g = j.at("gamma");
    m.gamma = g.is_string() ? std::numeric_limits<double>::infinity() : g.get<double>();
    m.reg_lambda = j.at("reg_lambda").get<double>();
    m.scale_pos_weight = j.at("scale_pos_weight").get<double>();
    m.base_score = j.at("base_score").get<double>();
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.history = j.at("history").get<std::vector<double>>();
    return m;
  }
};

inline double gbt_margin(const GbtModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != m.input_dim)
    throw DimensionMismatch(m.input_dim, static_cast<std::size_t>(x.size()));
  double z = m.base_score;
  for (const auto& t : m.trees) z += m.learning_rate * t.predict(x);
  return z;
}

inline double predict_gbt(const GbtModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return sigmoid(gbt_margin(m, x));
}

namespace detail {

// Each node carries, for every feature, its rows sorted by that feature.
// Splitting partitions those lists stably, so no node ever re-sorts.
using SortedRows = std::vector<std::vector<std::uint32_t>>;

struct GbtBuilder {
  const Eigen::MatrixXd& X;
  std::span<const int> y;
  const std::vector<double>& g;
  const std::vector<double>& h;
  const GbtParams& p;
  std::vector<char> goes_left;
  RegressionTree tree;

  double leaf_weight(double G, double H) const { return -G / (H + p.reg_lambda); }

  double score(double G, double H) const {
    const double denom = H + p.reg_lambda;
    return denom > 0 ? G * G / denom : 0.0;
  }

  int build(SortedRows& sorted, std::size_t depth) {
    const auto& rows = sorted.front();
    double G = 0, H = 0;
    bool has_pos = false, has_neg = false;
    for (auto r : rows) {
      G += g[r];
      H += h[r];
      (y[r] ? has_pos : has_neg) = true;
    }
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[static_cast<std::size_t>(id)].weight = leaf_weight(G, H);
    if (depth >= p.max_depth || rows.size() < 2) return id;

    const double parent = score(G, H);
    double best_gain = -std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < static_cast<std::size_t>(X.cols()); ++f) {
      const auto& order = sorted[f];
      const auto col = static_cast<Eigen::Index>(f);
      double GL = 0, HL = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        GL += g[order[i]];
        HL += h[order[i]];
        const double lo = X(order[i], col), hi = X(order[i + 1], col);
        if (!(lo < hi)) continue;
        const double GR = G - GL, HR = H - HL;
        if (HL <= 1e-12 || HR <= 1e-12) continue;
        const double gain = 0.5 * (score(GL, HL) + score(GR, HR) - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    if (best_feature < 0 || !(best_gain >= p.gamma)) return id;
    // A zero-gain split only helps when it separates labels a later level can
    // exploit, as in XOR where every root split is gain-neutral.
    if (!(best_gain > 1e-12) && !(has_pos && has_neg)) return id;

    for (auto r : rows) goes_left[r] = X(r, best_feature) < best_threshold;
    SortedRows left(sorted.size()), right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (auto r : sorted[f]) (goes_left[r] ? left[f] : right[f]).push_back(r);
      std::vector<std::uint32_t>().swap(sorted[f]);
    }
    const int l = build(left, depth + 1);
    left.clear();
    const int r = build(right, depth + 1);
    auto& n = tree.nodes[static_cast<std::size_t>(id)];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = l;
    n.right = r;
    n.gain = best_gain;
    return id;
  }
};

}  // namespace detail

// Weighted logistic loss of margins z; positives weigh scale_pos_weight.
inline double gbt_loss(std::span<const double> z, std::span<const int> y, double scale_pos_weight) {
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    loss += (y[i] ? scale_pos_weight : 1.0) * (softplus(z[i]) - y[i] * z[i]);
  return loss;
}

// Second-order boosting on logistic loss with exact greedy splits. Training
// is deterministic: ties keep the lowest feature index and threshold. The
// seed is accepted for interface symmetry; no subsampling is done.
inline GbtModel train_gbt(const Eigen::MatrixXd& X, std::span<const int> y,
                          const GbtParams& params = {}, std::uint64_t /*seed*/ = 0) {
  check_labels(y, X.rows());
  if (X.rows() == 0) throw EmptyPopulation();
  GbtModel m;
  m.learning_rate = params.learning_rate;
  m.max_depth = params.max_depth;
  m.gamma = params.gamma;
  m.reg_lambda = params.reg_lambda;
  m.scale_pos_weight = params.scale_pos_weight;
  m.input_dim = static_cast<std::size_t>(X.cols());

  const auto n = static_cast<std::size_t>(X.rows());
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double rate = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  m.base_score = std::log(rate / (1.0 - rate));

  detail::SortedRows presorted(static_cast<std::size_t>(std::max<Eigen::Index>(X.cols(), 1)));
  for (std::size_t f = 0; f < presorted.size(); ++f) {
    auto& order = presorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    if (static_cast<Eigen::Index>(f) < X.cols())
      std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return X(a, static_cast<Eigen::Index>(f)) < X(b, static_cast<Eigen::Index>(f));
      });
  }

  std::vector<double> z(n, m.base_score), g(n), h(n);
  m.history.push_back(gbt_loss(z, y, m.scale_pos_weight));
  for (std::size_t round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = y[i] ? m.scale_pos_weight : 1.0;
      const double pr = sigmoid(z[i]);
      g[i] = w * (pr - y[i]);
      h[i] = w * pr * (1.0 - pr);
    }
    detail::GbtBuilder builder{X, y, g, h, params, std::vector<char>(n, 0), {}};
    auto sorted = presorted;
    builder.build(sorted, 0);
    for (std::size_t i = 0; i < n; ++i) z[i] += m.learning_rate * builder.tree.predict(X.row(static_cast<Eigen::Index>(i)).transpose());
    m.trees.push_back(std::move(builder.tree));
    const double loss = gbt_loss(z, y, m.scale_pos_weight);
    if (!std::isfinite(loss)) throw NonFiniteLoss("gradient boosting");
    m.history.push_back(loss);
    const std::size_t k = params.early_stop_rounds;
    if (k > 0 && m.history.size() > k &&
        m.history[m.history.size() - 1 - k] - loss < params.early_stop_tol)
      break;
  }
  return m;
}

}  // namespace mfel::ml
