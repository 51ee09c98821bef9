#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lpanova/global_anova.hpp"

namespace lpanova {

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction, using
/// the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) when x > (a+1)/(a+b+2).
double incomplete_beta(double a, double b, double x);

/// F(d1, d2) distribution function; real-valued degrees of freedom allowed.
double f_cdf(double x, double d1, double d2);
/// Upper tail 1 - F(x), evaluated without cancellation.
double f_sf(double x, double d1, double d2);

enum class FVariant {
  Standard,      // SSR/(tr-1) over SSE/(n-tr)
  Conservative,  // SSR/(tr-1) over (Σ(Y-Ȳ)² - SSR)/(n-tr), absorbs boundary loss
};

std::string to_string(FVariant v);
FVariant parse_f_variant(const std::string& name);

struct FTestResult {
  double f_stat = 0.0;
  double df_model = 0.0;
  double df_resid = 0.0;
  double p_value = 1.0;
  FVariant variant = FVariant::Conservative;
};

/// Throws DegenerateDf when tr(H*) <= 1 or tr(H*) >= n, and
/// NonpositiveDenominator for a negative or 0/0 denominator. A zero
/// denominator with positive numerator gives F = +inf and p = 0.
FTestResult f_test(const GlobalAnova& global, double trace, FVariant variant);
FTestResult f_test(const GlobalAnova& global, const HStar& hstar, FVariant variant);

struct AnovaRow {
  std::string source;
  double df = 0.0;
  double ss_raw = 0.0;    // Σ-scale sum of squares
  double ss_per_n = 0.0;  // n⁻¹-scale sum of squares
  std::optional<double> ms;
  std::optional<double> f;
  std::optional<double> p_value;
};

struct AnovaTable {
  std::vector<AnovaRow> rows;  // Regression, Residual, Total
  double sst_integrated_raw = 0.0;
  double trace = 0.0;
  FTestResult test;
  std::size_t n = 0;
  double bandwidth = 0.0;
  int degree = 1;
  std::string kernel;
};

AnovaTable anova_table(const GlobalAnova& global, double trace, FVariant variant,
                       const FitConfig& config);

}  // namespace lpanova
