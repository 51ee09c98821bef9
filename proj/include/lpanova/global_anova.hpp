#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lpanova/kernel.hpp"
#include "lpanova/local_anova.hpp"
#include "lpanova/lpfit.hpp"

namespace lpanova {

/// Which total sum of squares serves as the R² denominator.
///   Integrated: ∫SST(x;h) f̂(x;h) dx, equal to SSE + SSR by construction.
///   Sample:     n⁻¹ Σ (Y_i - Ȳ)², free of the bandwidth but larger than
///               SSE + SSR when the kernel mass leaks past the grid.
enum class SstConvention { Integrated, Sample };

/// What to do with grid points whose local fit is infeasible.
enum class InfeasiblePolicy { Fail, Skip };

/// Global sums of squares on the per-n scale (multiply by n for raw sums).
struct GlobalAnova {
  std::size_t n = 0;
  double sst_integrated = 0.0;
  double sst_sample = 0.0;
  double sse = 0.0;
  double ssr = 0.0;
  double r2 = 0.0;         // ssr / sst_integrated
  double r2_sample = 0.0;  // ssr / sst_sample
  std::optional<double> trace;             // tr(H*) when computed
  std::optional<double> r2_adjusted;       // integrated-SST convention
  std::optional<double> r2_adjusted_sample;
  std::size_t grid_points = 0;
  std::size_t skipped_points = 0;

  double sst(SstConvention c) const { return c == SstConvention::Sample ? sst_sample : sst_integrated; }
  double r2_for(SstConvention c) const { return c == SstConvention::Sample ? r2_sample : r2; }
  std::optional<double> r2_adjusted_for(SstConvention c) const {
    return c == SstConvention::Sample ? r2_adjusted_sample : r2_adjusted;
  }
};

double sample_sst(std::span<const double> y);

/// Trapezoid integration of the local sums weighted by f̂. Empty points and
/// points with undefined R² are dropped from all three integrals alike.
/// Throws AllPointsInfeasible when fewer than two points remain.
GlobalAnova integrate_anova(std::span<const std::optional<LocalAnova>> points, const GridSpec& grid,
                            std::size_t n, double sst_sample);
GlobalAnova integrate_anova(const AnovaCurve& curve, const Dataset& data);

/// Adds tr(H*) and the adjusted R² values.
GlobalAnova with_trace(GlobalAnova global, double trace);

/// Local ANOVA curve, integration and (optionally) tr(H*) in one call.
/// The trace skips the same grid points the integrals skip.
GlobalAnova global_anova(const Dataset& data, const FitConfig& config, bool compute_trace = true);

/// Symmetric quasi-projection matrix H* = ∫ W H f̂ dx, assembled by trapezoid
/// quadrature over the grid. Entry (i,k) of the integrand is
/// K_h(X_i-x) K_h(X_k-x) z_iᵀ (Zᵀ K Z)⁻¹ z_k; only the lower triangle is
/// accumulated (grid index ascending) and then mirrored.
/// Cost O(G · m² · (p+1)) where m is the typical window size.
struct HStar {
  Eigen::MatrixXd matrix;
  double trace = 0.0;
  GridSpec grid;
  std::vector<std::size_t> skipped;

  std::size_t n() const { return static_cast<std::size_t>(matrix.rows()); }
};

struct HStarOptions {
  InfeasiblePolicy policy = InfeasiblePolicy::Fail;
  std::size_t max_n = 5000;
};

HStar hstar(const Dataset& data, const FitConfig& config, const HStarOptions& options = {});

/// tr(H*) from the diagonal integrand alone, without the n×n matrix.
double hstar_trace(const Dataset& data, const FitConfig& config,
                   InfeasiblePolicy policy = InfeasiblePolicy::Fail);

/// y* = H* y.
Eigen::VectorXd projected_response(const HStar& hstar, std::span<const double> y);

/// y*_i = ∫ Σ_j β̂_j(x)(X_i - x)^j K_h(X_i - x) dx evaluated from the local
/// fits directly, with the same quadrature and skipped points as H*.
Eigen::VectorXd projected_response_direct(const Dataset& data, const FitConfig& config,
                                          InfeasiblePolicy policy = InfeasiblePolicy::Fail);

struct QuadraticFormReport {
  double sse_quadratic = 0.0;  // n⁻¹ yᵀ(I - H*)y
  double sse_integrated = 0.0;
  double ssr_quadratic = 0.0;  // n⁻¹ yᵀ(H* - L)y
  double ssr_integrated = 0.0;
  double sse_gap = 0.0;
  double ssr_gap = 0.0;
  double sse_gap_relative = 0.0;
  double ssr_gap_relative = 0.0;
};

QuadraticFormReport quadratic_form_check(const HStar& hstar, std::span<const double> y,
                                         const GlobalAnova& global);

/// Rows whose kernel support [X_i - R h, X_i + R h] lies inside the grid and
/// contains no skipped grid point.
std::vector<std::size_t> interior_rows(const HStar& hstar, const Dataset& data,
                                       const FitConfig& config);

/// max_i |((H* - H*²) m)_i| over the given rows.
double idempotency_residual(const HStar& hstar, std::span<const double> m_values,
                            std::span<const std::size_t> rows);

struct HStarDiagnostics {
  double max_asymmetry = 0.0;
  std::size_t interior_count = 0;
  double max_interior_row_sum_error = 0.0;
  double max_boundary_row_sum_error = 0.0;
  /// max |(H* - L)² - (H*² - L)|; zero exactly when H*1 = 1.
  double centering_gap = 0.0;
};

/// Symmetry and row-sum checks; the centering gap costs O(n³).
HStarDiagnostics diagnose(const HStar& hstar, const Dataset& data, const FitConfig& config,
                          bool with_centering_gap = true);

/// First-order trace approximation for local linear fits:
/// h⁻¹ |Ω| (ν₀ + ν₂/μ₂), with |Ω| the covariate range.
double asymptotic_hstar_trace(const KernelInfo& info, double range, double h);

}  // namespace lpanova
