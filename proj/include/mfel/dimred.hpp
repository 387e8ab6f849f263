#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfel/error.hpp"

namespace mfel {

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;          // k x d, orthonormal rows
  Eigen::VectorXd explained_variance;  // k, non-increasing

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }

  bool operator==(const PcaModel& o) const {
    return mean.size() == o.mean.size() && components.rows() == o.components.rows() &&
           components.cols() == o.components.cols() && mean == o.mean &&
           components == o.components && explained_variance == o.explained_variance;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < components.rows(); ++r) {
      std::vector<double> row(components.cols());
      for (Eigen::Index c = 0; c < components.cols(); ++c) row[c] = components(r, c);
      rows.push_back(std::move(row));
    }
    return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"components", rows},
            {"explained_variance",
             std::vector<double>(explained_variance.data(),
                                 explained_variance.data() + explained_variance.size())}};
  }

  static PcaModel from_json(const nlohmann::json& j) {
    PcaModel m;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto var = j.at("explained_variance").get<std::vector<double>>();
    const auto& rows = j.at("components");
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.explained_variance =
        Eigen::Map<const Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
    m.components.resize(static_cast<Eigen::Index>(rows.size()), m.mean.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto row = rows[r].get<std::vector<double>>();
      if (row.size() != mean.size()) throw DimensionMismatch(mean.size(), row.size());
      for (std::size_t c = 0; c < row.size(); ++c)
        m.components(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    if (var.size() != rows.size()) throw DimensionMismatch(rows.size(), var.size());
    return m;
  }
};

// Principal components of the rows of X via eigendecomposition of the sample
// covariance. Each component is signed so that its largest-magnitude entry is
// positive. When k exceeds the rank of the data the trailing components span
// the null space and carry zero variance.
inline PcaModel fit_pca(const Eigen::MatrixXd& X, std::size_t k) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw Error("PCA needs at least two rows");
  if (k == 0 || static_cast<Eigen::Index>(k) > d) throw DimensionMismatch(static_cast<std::size_t>(d), k);

  PcaModel m;
  m.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const auto kk = static_cast<Eigen::Index>(k);
  m.components.resize(kk, d);
  m.explained_variance.resize(kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const Eigen::Index src = d - 1 - i;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.components.row(i) = v.transpose();
    m.explained_variance(i) = std::max(0.0, solver.eigenvalues()(src));
  }
  return m;
}

inline Eigen::VectorXd transform(const PcaModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.mean.size())
    throw DimensionMismatch(static_cast<std::size_t>(m.mean.size()), static_cast<std::size_t>(x.size()));
  return m.components * (x - m.mean);
}

inline std::vector<double> transform(const PcaModel& m, std::span<const double> x) {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd out = transform(m, Eigen::VectorXd(v));
  return {out.data(), out.data() + out.size()};
}

// Projection back into input space.
inline Eigen::VectorXd reconstruct(const PcaModel& m, const Eigen::VectorXd& z) {
  return m.mean + m.components.transpose() * z;
}

}  // namespace mfel
