#include <gtest/gtest.h>

#include "mfel/dimred.hpp"
#include "mfel/util.hpp"
#include "oracles.hpp"

using namespace mfel;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.normal();
  return X;
}

double reconstruction_mse(const PcaModel& m, const Eigen::MatrixXd& X) {
  double err = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    err += (reconstruct(m, transform(m, x)) - x).squaredNorm();
  }
  return err / static_cast<double>(X.size());
}

}  // namespace

TEST(FitPca, AxisAlignedPoints) {
  Eigen::MatrixXd X(4, 2);
  X << -3, 0, -1, 0, 1, 0, 3, 0;
  const auto m = fit_pca(X, 2);
  EXPECT_NEAR(m.components(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.components(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(m.explained_variance(1), 0.0, 1e-12);
  EXPECT_NEAR(m.explained_variance(0), 20.0 / 3.0, 1e-12);
}

TEST(FitPca, ExplainedVarianceMatchesJacobiOracle) {
  const auto X = random_matrix(50, 194, 1);
  const auto m = fit_pca(X, 194);
  oracle::Dense rows(50, std::vector<double>(194));
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 194; ++j) rows[i][j] = X(i, j);
  const auto ev = oracle::jacobi_eigenvalues(oracle::covariance(rows));
  const double top = ev.front();
  for (int k = 0; k < 194; ++k) {
    // Relative to the leading eigenvalue for the numerically zero tail.
    const double scale = k < 49 ? ev[k] : top;
    EXPECT_LE(std::abs(m.explained_variance(k) - std::max(0.0, ev[k])) / scale, 1e-8) << "k=" << k;
  }
}

TEST(FitPca, ComponentsOrthonormalAndSorted) {
  const auto X = random_matrix(60, 20, 2);
  const auto m = fit_pca(X, 20);
  const Eigen::MatrixXd G = m.components * m.components.transpose();
  EXPECT_LE((G - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-8);
  for (int i = 0; i + 1 < 20; ++i) EXPECT_GE(m.explained_variance(i), m.explained_variance(i + 1));
  for (int i = 0; i < 20; ++i) {
    Eigen::Index arg;
    m.components.row(i).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(m.components(i, arg), 0.0);
  }
}

TEST(FitPca, FullRankReconstructsExactly) {
  const auto X = random_matrix(30, 8, 3);
  EXPECT_LE(reconstruction_mse(fit_pca(X, 8), X), 1e-16);
}

TEST(FitPca, ReconstructionErrorNonIncreasingInK) {
  const auto X = random_matrix(50, 194, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k : {1u, 10u, 90u, 194u}) {
    const double e = reconstruction_mse(fit_pca(X, k), X);
    EXPECT_LE(e, prev + 1e-12) << "k=" << k;
    prev = e;
  }
}

TEST(FitPca, TrainingProjectionCenteredWithMatchingVariance) {
  const auto X = random_matrix(40, 12, 5);
  const auto m = fit_pca(X, 12);
  Eigen::MatrixXd Z(40, 12);
  for (int i = 0; i < 40; ++i) Z.row(i) = transform(m, Eigen::VectorXd(X.row(i).transpose())).transpose();
  EXPECT_LE(Z.colwise().mean().cwiseAbs().maxCoeff(), 1e-8);
  const Eigen::MatrixXd centered = Z.rowwise() - Z.colwise().mean();
  const double total = centered.squaredNorm() / 39.0;
  EXPECT_NEAR(total / m.explained_variance.sum(), 1.0, 1e-6);
}

TEST(FitPca, Preconditions) {
  EXPECT_THROW(fit_pca(random_matrix(1, 3, 6), 1), Error);
  EXPECT_THROW(fit_pca(random_matrix(5, 3, 6), 4), DimensionMismatch);
  EXPECT_THROW(fit_pca(random_matrix(5, 3, 6), 0), DimensionMismatch);
}

TEST(Transform, MeanMapsToZeroAndComponentToUnit) {
  const auto X = random_matrix(25, 6, 7);
  const auto m = fit_pca(X, 4);
  EXPECT_LE(transform(m, m.mean).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd x = m.mean + m.components.row(0).transpose();
  const auto z = transform(m, x);
  EXPECT_NEAR(z(0), 1.0, 1e-12);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(z(i), 0.0, 1e-12);
}

TEST(Transform, MatchesDirectProjection) {
  const auto X = random_matrix(25, 6, 8);
  const auto m = fit_pca(X, 3);
  Rng rng(9);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.normal();
  const auto z = transform(m, std::span<const double>(x));
  for (int i = 0; i < 3; ++i) {
    double dot = 0;
    for (int j = 0; j < 6; ++j) dot += m.components(i, j) * (x[j] - m.mean(j));
    EXPECT_NEAR(z[i], dot, 1e-12);
  }
  EXPECT_THROW(transform(m, Eigen::VectorXd::Zero(5)), DimensionMismatch);
}

TEST(PcaModel, JsonRoundTrip) {
  const auto m = fit_pca(random_matrix(10, 5, 10), 3);
  EXPECT_EQ(PcaModel::from_json(nlohmann::json::parse(m.to_json().dump())), m);
}
