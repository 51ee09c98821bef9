#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "lpanova/lpfit.hpp"

namespace testutil {

inline lpanova::Dataset uniform_data(std::mt19937_64& rng, std::size_t n, double (*m)(double),
                                     double sigma, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> ux(lo, hi);
  std::normal_distribution<double> eps(0.0, 1.0);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ux(rng);
    y[i] = m(x[i]) + sigma * eps(rng);
  }
  return lpanova::Dataset::make(std::move(x), std::move(y));
}

inline double sin2pi(double x) { return std::sin(2.0 * M_PI * x); }

/// Weighted polynomial least squares in the raw (unscaled) basis (x - x0)^j
/// solved by QR; an oracle independent of the library's solver.
inline Eigen::VectorXd wls_oracle(const std::vector<double>& x, const std::vector<double>& y,
                                  const std::vector<double>& w, double x0, int p) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] > 0.0) rows.push_back(static_cast<Eigen::Index>(i));
  }
  Eigen::MatrixXd a(rows.size(), p + 1);
  Eigen::VectorXd b(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double sw = std::sqrt(w[rows[r]]);
    for (int j = 0; j <= p; ++j) a(r, j) = sw * std::pow(x[rows[r]] - x0, j);
    b(r) = sw * y[rows[r]];
  }
  return a.colPivHouseholderQr().solve(b);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testutil
