#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lpanova/lpfit.hpp"

namespace lpanova {

/// Local sums of squares at one grid point. SST uses the full-sample mean Ȳ.
struct LocalAnova {
  double x0 = 0.0;
  double sst = 0.0;
  double sse = 0.0;
  double ssr = 0.0;
  double fhat = 0.0;
  /// Empty when SST is below `r2_tolerance` (constant-response window).
  std::optional<double> r2;
};

/// SST threshold below which the pointwise R² is undefined: 1e-12·max(1, Ȳ²).
double r2_tolerance(double ybar);

double local_sse(const Dataset& data, const LocalFit& fit, const FitConfig& config);
double local_sst(const Dataset& data, double x0, const FitConfig& config);
double local_ssr(const Dataset& data, const LocalFit& fit, const FitConfig& config);

/// 1 - SSE/SST clamped to [0, 1]; throws UndefinedR2 when SST is too small.
double local_r2(const LocalAnova& anova, double ybar = 0.0);

LocalAnova local_anova(const Dataset& data, const LocalFit& fit, const FitConfig& config);

/// Local ANOVA over a grid; infeasible points are empty and listed in `failures`.
struct AnovaCurve {
  GridSpec grid;
  std::vector<std::optional<LocalAnova>> points;
  std::vector<PointFailure> failures;
};

AnovaCurve local_anova_curve(const Dataset& data, const FitConfig& config);
AnovaCurve local_anova_curve(const Dataset& data, const FitConfig& config, const Curve& fits);

/// Both sides of the relation between the local linear SSE and the
/// Nadaraya–Watson weighted error:
///   SSE₁(x) = Σ(Y-m̂_NW)²K/ΣK - β̂₁² Σ(X-X̄_k)²K/ΣK
struct NwIdentity {
  double lhs = 0.0;    // SSE₁(x;h) from the local linear fit
  double rhs = 0.0;    // right-hand side from direct weighted sums
  double gap = 0.0;    // |lhs - rhs|
  double scale = 0.0;  // magnitude of the larger right-hand term, for relative checks
};

NwIdentity nw_sse_identity_gap(const Dataset& data, double x0, double h, const Kernel& kernel);

}  // namespace lpanova
