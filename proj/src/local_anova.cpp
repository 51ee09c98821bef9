#include "lpanova/local_anova.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpanova/errors.hpp"

namespace lpanova {

namespace {

double weight_sum(const Dataset& data, double x0, const FitConfig& config) {
  double s = 0.0;
  for (double xi : data.x) s += config.kernel.scaled(xi - x0, config.bandwidth);
  if (!(s > 0.0)) {
    std::ostringstream msg;
    msg << "empty kernel window at x0=" << x0;
    throw EmptyWindow(msg.str());
  }
  return s;
}

}  // namespace

double r2_tolerance(double ybar) { return 1e-12 * std::max(1.0, ybar * ybar); }

double local_sse(const Dataset& data, const LocalFit& fit, const FitConfig& config) {
  if (!(fit.fhat > 0.0)) throw EmptyWindow("local SSE needs fhat > 0");
  const double total = weight_sum(data, fit.x0, config);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = config.kernel.scaled(data.x[i] - fit.x0, config.bandwidth);
    if (k == 0.0) continue;
    const double r = data.y[i] - fit.fitted(data.x[i]);
    acc += r * r * k;
  }
  return acc / total;
}

double local_sst(const Dataset& data, double x0, const FitConfig& config) {
  const double total = weight_sum(data, x0, config);
  const double ybar = data.mean_y();
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = config.kernel.scaled(data.x[i] - x0, config.bandwidth);
    if (k == 0.0) continue;
    const double d = data.y[i] - ybar;
    acc += d * d * k;
  }
  return acc / total;
}

double local_ssr(const Dataset& data, const LocalFit& fit, const FitConfig& config) {
  if (!(fit.fhat > 0.0)) throw EmptyWindow("local SSR needs fhat > 0");
  const double total = weight_sum(data, fit.x0, config);
  const double ybar = data.mean_y();
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = config.kernel.scaled(data.x[i] - fit.x0, config.bandwidth);
    if (k == 0.0) continue;
    const double d = fit.fitted(data.x[i]) - ybar;
    acc += d * d * k;
  }
  return acc / total;
}

double local_r2(const LocalAnova& anova, double ybar) {
  if (!(anova.sst > r2_tolerance(ybar))) {
    std::ostringstream msg;
    msg << "pointwise R^2 undefined at x0=" << anova.x0 << " (SST=" << anova.sst << ")";
    throw UndefinedR2(msg.str());
  }
  return std::clamp(1.0 - anova.sse / anova.sst, 0.0, 1.0);
}

LocalAnova local_anova(const Dataset& data, const LocalFit& fit, const FitConfig& config) {
  if (!(fit.fhat > 0.0)) throw EmptyWindow("local ANOVA needs fhat > 0");
  // One pass computing all three sums with the same weights.
  const double ybar = data.mean_y();
  double sw = 0.0, sst = 0.0, sse = 0.0, ssr = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = config.kernel.scaled(data.x[i] - fit.x0, config.bandwidth);
    if (k == 0.0) continue;
    const double yhat = fit.fitted(data.x[i]);
    const double dt = data.y[i] - ybar;
    const double de = data.y[i] - yhat;
    const double dr = yhat - ybar;
    sw += k;
    sst += dt * dt * k;
    sse += de * de * k;
    ssr += dr * dr * k;
  }
  LocalAnova a;
  a.x0 = fit.x0;
  a.fhat = fit.fhat;
  a.sst = sst / sw;
  a.sse = sse / sw;
  a.ssr = ssr / sw;
  if (a.sst > r2_tolerance(ybar)) a.r2 = local_r2(a, ybar);
  return a;
}

AnovaCurve local_anova_curve(const Dataset& data, const FitConfig& config, const Curve& fits) {
  AnovaCurve out;
  out.grid = fits.grid;
  out.points.resize(fits.points.size());
  for (std::size_t g = 0; g < fits.points.size(); ++g) {
    const CurvePoint& p = fits.points[g];
    if (p.fit) out.points[g] = local_anova(data, *p.fit, config);
    else if (p.failure) out.failures.push_back(*p.failure);
  }
  return out;
}

AnovaCurve local_anova_curve(const Dataset& data, const FitConfig& config) {
  return local_anova_curve(data, config, curve(data, config));
}

NwIdentity nw_sse_identity_gap(const Dataset& data, double x0, double h, const Kernel& kernel) {
  FitConfig linear{1, h, kernel, std::nullopt, 2};
  const LocalFit fit = local_fit(data, x0, linear);

  double sw = 0.0, swy = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = kernel.scaled(data.x[i] - x0, h);
    sw += k;
    swy += k * data.y[i];
    swx += k * data.x[i];
  }
  const double m_nw = swy / sw;
  const double xbar_k = swx / sw;
  double nw_err = 0.0, x_spread = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = kernel.scaled(data.x[i] - x0, h);
    if (k == 0.0) continue;
    nw_err += (data.y[i] - m_nw) * (data.y[i] - m_nw) * k;
    x_spread += (data.x[i] - xbar_k) * (data.x[i] - xbar_k) * k;
  }
  nw_err /= sw;
  x_spread /= sw;
  const double slope_term = fit.beta[1] * fit.beta[1] * x_spread;

  NwIdentity out;
  out.lhs = local_sse(data, fit, linear);
  out.rhs = nw_err - slope_term;
  out.gap = std::abs(out.lhs - out.rhs);
  out.scale = std::max(nw_err, slope_term);
  return out;
}

}  // namespace lpanova
