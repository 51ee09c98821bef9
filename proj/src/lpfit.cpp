#include "lpanova/lpfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lpanova/errors.hpp"
#include "weighted_ls.hpp"

namespace lpanova {

Dataset Dataset::make(std::vector<double> x, std::vector<double> y) {
  Dataset d{std::move(x), std::move(y)};
  d.validate();
  return d;
}

void Dataset::validate() const {
  if (x.size() != y.size())
    throw InputError("x and y lengths differ (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  if (x.size() < 2) throw InputError("need at least 2 observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw InputError("non-finite value at observation " + std::to_string(i + 1));
}

double Dataset::mean_y() const {
  return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}
double Dataset::min_x() const { return *std::min_element(x.begin(), x.end()); }
double Dataset::max_x() const { return *std::max_element(x.begin(), x.end()); }

void FitConfig::validate() const {
  if (degree < 0) throw InputError("degree p must be >= 0");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InputError("bandwidth h must be > 0");
  if (grid) grid->validate();
  else if (grid_count < 2) throw InputError("grid count must be >= 2");
}

GridSpec resolve_grid(const Dataset& data, const FitConfig& config) {
  if (config.grid) return *config.grid;
  GridSpec g{data.min_x(), data.max_x(), config.grid_count};
  g.validate();
  return g;
}

double LocalFit::fitted(double xi) const {
  const double t = xi - x0;
  double acc = 0.0;
  for (auto it = beta.rbegin(); it != beta.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double kde(const Dataset& data, double x0, double h, const Kernel& kernel) {
  if (!(h > 0.0)) throw InputError("bandwidth h must be > 0");
  double sum = 0.0;
  for (double xi : data.x) sum += kernel.scaled(xi - x0, h);
  return sum / static_cast<double>(data.size());
}

namespace detail {

LocalSolve solve_local(const Dataset& data, double x0, const FitConfig& config) {
  const double h = config.bandwidth;
  const int p = config.degree;
  Window window = kernel_window(data.x, x0, h, config.kernel);
  if (window.index.empty()) {
    std::ostringstream msg;
    msg << "no observations within the kernel window at x0=" << x0;
    throw EmptyWindow(msg.str());
  }
  if (window.distinct < static_cast<std::size_t>(p) + 1) {
    std::ostringstream msg;
    msg << "only " << window.distinct << " distinct weighted x values at x0=" << x0
        << " for degree " << p;
    throw SingularDesign(msg.str());
  }

  WeightedLeastSquares wls(scaled_polynomial_design(data.x, window, x0, h, p), window.weight);
  Eigen::VectorXd y(static_cast<Eigen::Index>(window.index.size()));
  for (std::size_t r = 0; r < window.index.size(); ++r)
    y(static_cast<Eigen::Index>(r)) = data.y[window.index[r]];
  const Eigen::VectorXd scaled = wls.fit(y);

  LocalFit fit;
  fit.x0 = x0;
  fit.beta.resize(static_cast<std::size_t>(p) + 1);
  double hp = 1.0;
  for (int j = 0; j <= p; ++j) {
    fit.beta[j] = scaled(j) / hp;
    hp *= h;
  }
  fit.fhat = window.weight_sum / static_cast<double>(data.size());
  fit.n_eff = window.index.size();
  fit.condition = wls.condition();
  return LocalSolve{std::move(window), std::move(wls), std::move(fit)};
}

}  // namespace detail

LocalFit local_fit(const Dataset& data, double x0, const FitConfig& config) {
  config.validate();
  return detail::solve_local(data, x0, config).fit;
}

std::size_t Curve::failure_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const CurvePoint& p) { return p.failure.has_value(); }));
}

void Curve::require_all_feasible() const {
  std::ostringstream msg;
  std::optional<std::size_t> first;
  bool all_empty = true;
  for (const auto& p : points) {
    if (!p.failure) continue;
    if (!first) {
      first = p.failure->grid_index;
      msg << "local fit failed at grid index";
    }
    msg << ' ' << p.failure->grid_index;
    all_empty = all_empty && p.failure->kind == FailureKind::EmptyWindow;
  }
  if (!first) return;
  if (all_empty) throw EmptyWindow(msg.str());
  throw SingularDesign(msg.str(), first);
}

Curve curve(const Dataset& data, const FitConfig& config) {
  config.validate();
  Curve out;
  out.grid = resolve_grid(data, config);
  out.points.resize(out.grid.count);
  for (std::size_t g = 0; g < out.grid.count; ++g) {
    CurvePoint& point = out.points[g];
    point.x0 = out.grid.at(g);
    try {
      point.fit = local_fit(data, point.x0, config);
    } catch (const EmptyWindow& e) {
      point.failure = PointFailure{g, FailureKind::EmptyWindow, e.what()};
    } catch (const SingularDesign& e) {
      point.failure = PointFailure{g, FailureKind::SingularDesign, e.what()};
    }
  }
  return out;
}

}  // namespace lpanova
