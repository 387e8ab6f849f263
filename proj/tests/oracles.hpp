#pragma once

// Independent reference computations used to check the library. None of
// these call into the code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

// Sample covariance (n - 1 denominator) of the rows of X.
inline Dense covariance(const Dense& X) {
  const std::size_t n = X.size(), d = X[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : X)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (auto& m : mean) m /= static_cast<double>(n);
  Dense C(d, std::vector<double>(d, 0.0));
  for (const auto& r : X)
    for (std::size_t i = 0; i < d; ++i) {
      const double a = r[i] - mean[i];
      for (std::size_t j = i; j < d; ++j) C[i][j] += a * (r[j] - mean[j]);
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      C[i][j] /= static_cast<double>(n - 1);
      C[j][i] = C[i][j];
    }
  return C;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
// descending.
inline std::vector<double> jacobi_eigenvalues(Dense A, double tol = 1e-14, int max_sweeps = 100) {
  const std::size_t n = A.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) (i == j ? scale : off) += A[i][j] * A[i][j];
    if (off <= tol * tol * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (A[p][q] == 0.0) continue;
        const double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A[k][p], akq = A[k][q];
          A[k][p] = c * akp - s * akq;
          A[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A[p][k], aqk = A[q][k];
          A[p][k] = c * apk - s * aqk;
          A[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = A[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

struct Tally {
  long tp = 0, tn = 0, fp = 0, fn = 0;
};

inline Tally tally(const std::vector<int>& y, const std::vector<int>& p) {
  Tally t;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1 && p[i] == 1) ++t.tp;
    else if (y[i] == 0 && p[i] == 0) ++t.tn;
    else if (y[i] == 0 && p[i] == 1) ++t.fp;
    else ++t.fn;
  }
  return t;
}

// Metrics as ratios of integers, zero when the denominator is zero.
struct Ratios {
  double accuracy, precision, recall, f1;
};

inline Ratios ratios(const Tally& t) {
  auto div = [](long a, long b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  Ratios r{};
  r.accuracy = div(t.tp + t.tn, t.tp + t.tn + t.fp + t.fn);
  r.precision = div(t.tp, t.tp + t.fp);
  r.recall = div(t.tp, t.tp + t.fn);
  // 2PR/(P+R) = 2tp / (2tp + fp + fn)
  r.f1 = div(2 * t.tp, 2 * t.tp + t.fp + t.fn);
  return r;
}

// Central difference of f around x[i].
inline double central_difference(const std::function<double()>& f, double& xi, double h) {
  const double saved = xi;
  xi = saved + h;
  const double up = f();
  xi = saved - h;
  const double down = f();
  xi = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace oracle
