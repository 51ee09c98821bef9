#include "lpanova/inference.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lpanova/errors.hpp"

namespace lpanova {

namespace {

constexpr int kMaxIterations = 300;
constexpr double kConvergence = 1e-12;
constexpr double kTiny = 1e-300;

double log_gamma(double v) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(v, &sign);
#else
  return std::lgamma(v);
#endif
}

double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kConvergence) return h;
  }
  std::ostringstream msg;
  msg << "incomplete beta continued fraction did not converge for a=" << a << " b=" << b
      << " x=" << x;
  throw NumericalError(msg.str());
}

// I_x(a,b) given both x and 1-x, so callers holding an accurate complement
// never form 1-x themselves.
double regularized_beta(double a, double b, double x, double one_minus_x) {
  if (x <= 0.0) return 0.0;
  if (one_minus_x <= 0.0) return 1.0;
  const double log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                           b * std::log(one_minus_x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, one_minus_x) / b;
}

void check_f_domain(double x, double d1, double d2) {
  if (std::isnan(x) || x < 0.0) throw InputError("F distribution argument must be >= 0");
  if (!(d1 > 0.0) || !(d2 > 0.0) || !std::isfinite(d1) || !std::isfinite(d2))
    throw InputError("F distribution degrees of freedom must be positive and finite");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("incomplete beta needs a > 0 and b > 0");
  if (std::isnan(x) || x < 0.0 || x > 1.0) throw InputError("incomplete beta needs 0 <= x <= 1");
  return regularized_beta(a, b, x, 1.0 - x);
}

double f_cdf(double x, double d1, double d2) {
  check_f_domain(x, d1, d2);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double denom = d1 * x + d2;
  return regularized_beta(d1 / 2.0, d2 / 2.0, d1 * x / denom, d2 / denom);
}

double f_sf(double x, double d1, double d2) {
  check_f_domain(x, d1, d2);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double denom = d1 * x + d2;
  return regularized_beta(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * x / denom);
}

std::string to_string(FVariant v) {
  return v == FVariant::Standard ? "standard" : "conservative";
}

FVariant parse_f_variant(const std::string& name) {
  if (name == "standard") return FVariant::Standard;
  if (name == "conservative") return FVariant::Conservative;
  throw InputError("unknown F variant '" + name + "' (expected standard or conservative)");
}

FTestResult f_test(const GlobalAnova& global, double trace, FVariant variant) {
  const double n = static_cast<double>(global.n);
  FTestResult r;
  r.variant = variant;
  r.df_model = trace - 1.0;
  r.df_resid = n - trace;
  if (!(r.df_model > 0.0) || !(r.df_resid > 0.0)) {
    std::ostringstream msg;
    msg << "degenerate degrees of freedom: tr(H*)=" << trace << " with n=" << global.n;
    throw DegenerateDf(msg.str());
  }
  const double numerator = global.ssr / r.df_model;
  const double residual =
      variant == FVariant::Standard ? global.sse : global.sst_sample - global.ssr;
  const double denominator = residual / r.df_resid;
  if (denominator < 0.0 || (denominator == 0.0 && !(numerator > 0.0))) {
    std::ostringstream msg;
    msg << "F denominator is " << denominator << " (" << to_string(variant) << " variant)";
    throw NonpositiveDenominator(msg.str());
  }
  if (denominator == 0.0) {
    r.f_stat = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.f_stat = numerator / denominator;
  r.p_value = f_sf(r.f_stat, r.df_model, r.df_resid);
  return r;
}

FTestResult f_test(const GlobalAnova& global, const HStar& hstar, FVariant variant) {
  return f_test(global, hstar.trace, variant);
}

AnovaTable anova_table(const GlobalAnova& global, double trace, FVariant variant,
                       const FitConfig& config) {
  AnovaTable t;
  t.test = f_test(global, trace, variant);
  const double n = static_cast<double>(global.n);
  t.n = global.n;
  t.trace = trace;
  t.bandwidth = config.bandwidth;
  t.degree = config.degree;
  t.kernel = config.kernel.name();
  t.sst_integrated_raw = n * global.sst_integrated;

  AnovaRow reg{"Regression", t.test.df_model, n * global.ssr, global.ssr,
               n * global.ssr / t.test.df_model, t.test.f_stat, t.test.p_value};
  AnovaRow res{"Residual", t.test.df_resid, n * global.sse, global.sse,
               n * global.sse / t.test.df_resid, std::nullopt, std::nullopt};
  AnovaRow tot{"Total", n - 1.0, n * global.sst_sample, global.sst_sample,
               std::nullopt, std::nullopt, std::nullopt};
  t.rows = {reg, res, tot};
  return t;
}

}  // namespace lpanova
