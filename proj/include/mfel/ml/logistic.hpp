#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"

namespace mfel::ml {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline void check_labels(std::span<const int> y, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(y.size()) != rows)
    throw LengthMismatch(static_cast<std::size_t>(rows), y.size());
  for (int v : y)
    if (v != 0 && v != 1) throw NonBinaryLabel(v);
}

struct LogisticParams {
  double C = 10.0;
  double tol = 1e-4;
  std::size_t max_iter = 1000;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double C = 10.0;
  double tol = 1e-4;
  std::vector<double> history;  // objective after each accepted step

  bool operator==(const LogisticModel& o) const {
    return weights.size() == o.weights.size() && weights == o.weights && bias == o.bias &&
           C == o.C && tol == o.tol && history == o.history;
  }

  nlohmann::json to_json() const {
    return {{"weights", std::vector<double>(weights.data(), weights.data() + weights.size())},
            {"bias", bias},
            {"C", C},
            {"tol", tol},
            {"history", history}};
  }

  static LogisticModel from_json(const nlohmann::json& j) {
    LogisticModel m;
    const auto w = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.bias = j.at("bias").get<double>();
    m.C = j.at("C").get<double>();
    m.tol = j.at("tol").get<double>();
    m.history = j.at("history").get<std::vector<double>>();
    return m;
  }
};

// Summed negative log-likelihood plus ||w||^2 / (2C). The bias is not
// penalized.
inline double logistic_objective(const Eigen::MatrixXd& X, std::span<const int> y,
                                 const Eigen::VectorXd& w, double b, double C) {
  const Eigen::VectorXd z = (X * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - y[i] * z(i);
  return loss + w.squaredNorm() / (2.0 * C);
}

inline void logistic_gradient(const Eigen::MatrixXd& X, std::span<const int> y,
                              const Eigen::VectorXd& w, double b, double C,
                              Eigen::VectorXd& grad_w, double& grad_b) {
  const Eigen::VectorXd z = (X * w).array() + b;
  Eigen::VectorXd residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) residual(i) = sigmoid(z(i)) - y[i];
  grad_w = X.transpose() * residual + w / C;
  grad_b = residual.sum();
}

// Full-batch gradient descent with backtracking (Armijo) line search,
// starting from zero. Stops when an accepted step improves the objective by
// less than tol, or after max_iter steps. Deterministic; the seed is accepted
// for interface symmetry with the other trainers.
inline LogisticModel train_logistic(const Eigen::MatrixXd& X, std::span<const int> y,
                                    const LogisticParams& params = {},
                                    std::uint64_t /*seed*/ = 0) {
  check_labels(y, X.rows());
  if (!(params.C > 0)) throw Error("C must be positive");
  LogisticModel m;
  m.C = params.C;
  m.tol = params.tol;
  m.weights = Eigen::VectorXd::Zero(X.cols());
  m.bias = 0.0;

  double f = logistic_objective(X, y, m.weights, m.bias, m.C);
  if (!std::isfinite(f)) throw NonFiniteLoss("logistic regression");
  m.history.push_back(f);
  Eigen::VectorXd gw;
  double gb = 0.0;
  double step = 1.0;
  for (std::size_t it = 0; it < params.max_iter; ++it) {
    logistic_gradient(X, y, m.weights, m.bias, m.C, gw, gb);
    const double gnorm2 = gw.squaredNorm() + gb * gb;
    if (gnorm2 == 0.0) break;
    step *= 2.0;
    double f_new = 0.0;
    Eigen::VectorXd w_new;
    double b_new = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      w_new = m.weights - step * gw;
      b_new = m.bias - step * gb;
      f_new = logistic_objective(X, y, w_new, b_new, m.C);
      if (std::isfinite(f_new) && f_new <= f - 0.5 * step * gnorm2) break;
      step *= 0.5;
    }
    if (!std::isfinite(f_new)) throw NonFiniteLoss("logistic regression");
    if (f_new > f) break;  // line search exhausted
    m.weights = std::move(w_new);
    m.bias = b_new;
    const double improvement = f - f_new;
    f = f_new;
    m.history.push_back(f);
    if (improvement < params.tol) break;
  }
  return m;
}

inline double predict_logistic(const LogisticModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.weights.size())
    throw DimensionMismatch(static_cast<std::size_t>(m.weights.size()), static_cast<std::size_t>(x.size()));
  return sigmoid(m.weights.dot(x) + m.bias);
}

}  // namespace mfel::ml
