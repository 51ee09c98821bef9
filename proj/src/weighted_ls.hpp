#pragma once

// Shared local weighted least squares machinery (not installed).

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "lpanova/kernel.hpp"
#include "lpanova/lpfit.hpp"

namespace lpanova::detail {

/// Normal-equation solver for Σ w_i (y_i - z_iᵀβ)².
///
/// The Gram matrix is equilibrated by its diagonal before the Cholesky
/// factorization, so the reported condition number is invariant to column
/// scaling. Solutions get one step of iterative refinement.
class WeightedLeastSquares {
 public:
  WeightedLeastSquares(Eigen::MatrixXd design, Eigen::VectorXd weights);

  Eigen::VectorXd fit(const Eigen::VectorXd& y) const;
  /// Rows q_i with q_iᵀq_k = z_iᵀ (ZᵀWZ)⁻¹ z_k.
  Eigen::MatrixXd whitened() const;
  double condition() const { return condition_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  Eigen::VectorXd solve_gram(const Eigen::VectorXd& rhs) const;

  Eigen::MatrixXd design_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd scale_;  // D = diag(A)^{-1/2}
  Eigen::MatrixXd factor_;  // lower Cholesky factor of D A D (or empty when LDLT is used)
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool use_ldlt_ = false;
  double condition_ = 1.0;
};

/// Observations with positive kernel weight around a point.
struct Window {
  std::vector<std::size_t> index;  // positions in the full sample
  Eigen::VectorXd weight;          // K_h(X_i - x0)
  double weight_sum = 0.0;         // Σ K_h over the full sample
  std::size_t distinct = 0;        // distinct covariate values among active points
};

Window kernel_window(std::span<const double> x, double x0, double h, const Kernel& kernel);

/// Rows ((X_i - x0)/h)^j, j = 0..degree, for the window's observations.
Eigen::MatrixXd scaled_polynomial_design(std::span<const double> x, const Window& window,
                                         double x0, double h, int degree);

/// Everything produced by one local polynomial solve.
struct LocalSolve {
  Window window;
  WeightedLeastSquares wls;
  LocalFit fit;
};

/// Throws EmptyWindow or SingularDesign.
LocalSolve solve_local(const Dataset& data, double x0, const FitConfig& config);

}  // namespace lpanova::detail
