#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "lpanova/global_anova.hpp"
#include "lpanova/local_anova.hpp"
#include "lpanova/lpfit.hpp"

namespace lpanova {

/// Varying coefficient model data Y = Σ_k a_k(U) X_k + σ(U)ε. Column 0 of
/// `x` is the intercept and must be identically 1.
struct VcmDataset {
  std::vector<double> u;
  Eigen::MatrixXd x;  // n × d
  std::vector<double> y;

  static VcmDataset make(std::vector<double> u, Eigen::MatrixXd x, std::vector<double> y);
  /// Prepends the all-ones column to `covariates` (n × (d-1), may have zero columns).
  static VcmDataset with_intercept(std::vector<double> u, const Eigen::MatrixXd& covariates,
                                   std::vector<double> y);

  void validate() const;
  std::size_t size() const { return u.size(); }
  std::size_t d() const { return static_cast<std::size_t>(x.cols()); }
  double mean_y() const;
};

struct VcmFit {
  double u0 = 0.0;
  Eigen::MatrixXd beta;  // d × (p+1): β̂_{k,j} in units of a_k per u^j
  Eigen::VectorXd a_hat;  // column 0 of beta
  double ghat = 0.0;
  std::size_t n_eff = 0;
  double condition = 1.0;

  /// Ŷ_i(u0) = Σ_k Σ_j β̂_{k,j} (U_i - u0)^j X_ik.
  double fitted(const VcmDataset& data, std::size_t i) const;
};

/// Solves the locally weighted system with design columns ordered
/// covariate-major (block k holds X_k·((U-u0)/h)^j, j = 0..p). The
/// criterion's 1/ĝ factor is a positive constant and does not change the
/// minimizer, so the undivided system is solved.
VcmFit vcm_local_fit(const VcmDataset& data, double u0, const FitConfig& config);

LocalAnova vcm_local_anova(const VcmDataset& data, const VcmFit& fit, const FitConfig& config);

struct VcmGlobalAnova {
  GlobalAnova global;
  std::size_t d = 1;
  std::vector<PointFailure> failures;
  /// tr(H_u*) and the quadratic-form cross-check, when assembly was requested.
  /// Informational only: no VCM degrees of freedom or tests are derived.
  std::optional<double> hu_trace;
  std::optional<QuadraticFormReport> quadratic_check;
};

struct VcmOptions {
  bool assemble_hstar = false;
  std::size_t max_n = 5000;
};

VcmGlobalAnova vcm_global(const VcmDataset& data, const FitConfig& config,
                          const VcmOptions& options = {});

/// H_u* = ∫ W_u H_u ĝ du, same assembly contract as `hstar`.
HStar vcm_hstar(const VcmDataset& data, const FitConfig& config, const HStarOptions& options = {});

}  // namespace lpanova
