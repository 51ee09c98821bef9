#include "lpanova/global_anova.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lpanova/errors.hpp"
#include "weighted_ls.hpp"

namespace lpanova {

namespace {

void check_capacity(std::size_t n, std::size_t max_n) {
  if (n > max_n) {
    std::ostringstream msg;
    msg << "H* for n=" << n << " exceeds the configured cap of " << max_n
        << " observations (" << (n * n * 8) / (1024 * 1024) << " MiB dense)";
    throw CapacityError(msg.str());
  }
}

// Visits every grid point, handing feasible local solves to `on_slice`.
// Infeasible points either rethrow with the grid index or are recorded.
template <typename OnSlice>
std::vector<std::size_t> sweep(const Dataset& data, const FitConfig& config, const GridSpec& grid,
                               InfeasiblePolicy policy, OnSlice&& on_slice) {
  std::vector<std::size_t> skipped;
  for (std::size_t g = 0; g < grid.count; ++g) {
    const double x0 = grid.at(g);
    std::optional<detail::LocalSolve> solve;
    try {
      solve.emplace(detail::solve_local(data, x0, config));
    } catch (const SingularDesign& e) {
      if (policy == InfeasiblePolicy::Fail)
        throw SingularDesign(std::string(e.what()) + " (grid index " + std::to_string(g) + ")", g);
      skipped.push_back(g);
      continue;
    } catch (const EmptyWindow& e) {
      if (policy == InfeasiblePolicy::Fail)
        throw SingularDesign(std::string(e.what()) + " (grid index " + std::to_string(g) + ")", g);
      skipped.push_back(g);
      continue;
    }
    on_slice(g, *solve);
  }
  return skipped;
}

}  // namespace

double sample_sst(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : y) acc += (v - mean) * (v - mean);
  return acc / n;
}

GlobalAnova integrate_anova(std::span<const std::optional<LocalAnova>> points, const GridSpec& grid,
                            std::size_t n, double sst_sample) {
  if (points.size() != grid.count)
    throw InputError("local ANOVA sequence is not aligned with the grid");
  const std::vector<double> w = grid.trapezoid_weights();
  GlobalAnova out;
  out.n = n;
  out.sst_sample = sst_sample;
  out.grid_points = grid.count;
  std::size_t used = 0;
  for (std::size_t g = 0; g < points.size(); ++g) {
    const auto& p = points[g];
    if (!p || !p->r2) {
      ++out.skipped_points;
      continue;
    }
    ++used;
    const double wf = w[g] * p->fhat;
    out.sst_integrated += wf * p->sst;
    out.sse += wf * p->sse;
    out.ssr += wf * p->ssr;
  }
  if (used < 2) {
    std::ostringstream msg;
    msg << "only " << used << " of " << grid.count << " grid points are feasible";
    throw AllPointsInfeasible(msg.str());
  }
  out.r2 = out.sst_integrated > 0.0 ? out.ssr / out.sst_integrated : 0.0;
  out.r2_sample = sst_sample > 0.0 ? out.ssr / sst_sample : 0.0;
  return out;
}

GlobalAnova integrate_anova(const AnovaCurve& curve, const Dataset& data) {
  return integrate_anova(curve.points, curve.grid, data.size(), sample_sst(data.y));
}

GlobalAnova with_trace(GlobalAnova global, double trace) {
  const double n = static_cast<double>(global.n);
  global.trace = trace;
  const double resid_df = n - trace;
  if (resid_df > 0.0) {
    if (global.sst_integrated > 0.0)
      global.r2_adjusted = 1.0 - (global.sse / resid_df) / (global.sst_integrated / (n - 1.0));
    if (global.sst_sample > 0.0)
      global.r2_adjusted_sample = 1.0 - (global.sse / resid_df) / (global.sst_sample / (n - 1.0));
  }
  return global;
}

GlobalAnova global_anova(const Dataset& data, const FitConfig& config, bool compute_trace) {
  config.validate();
  const GridSpec grid = resolve_grid(data, config);
  std::vector<std::optional<LocalAnova>> points(grid.count);
  const std::vector<double> w = grid.trapezoid_weights();
  double trace = 0.0;
  sweep(data, config, grid, InfeasiblePolicy::Skip, [&](std::size_t g, const detail::LocalSolve& s) {
    points[g] = local_anova(data, s.fit, config);
    if (!compute_trace) return;
    const Eigen::MatrixXd q = s.wls.whitened();
    double diag = 0.0;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      const double k = s.window.weight(r);
      diag += k * k * q.row(r).squaredNorm();
    }
    trace += w[g] * diag;
  });
  GlobalAnova out = integrate_anova(points, grid, data.size(), sample_sst(data.y));
  if (compute_trace) out = with_trace(out, trace);
  return out;
}

HStar hstar(const Dataset& data, const FitConfig& config, const HStarOptions& options) {
  config.validate();
  const std::size_t n = data.size();
  check_capacity(n, options.max_n);
  HStar out;
  out.grid = resolve_grid(data, config);
  out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const std::vector<double> w = out.grid.trapezoid_weights();
  out.skipped = sweep(data, config, out.grid, options.policy,
                      [&](std::size_t g, const detail::LocalSolve& s) {
                        // R_i = K_i q_i, slice = R Rᵀ
                        Eigen::MatrixXd r = s.wls.whitened();
                        for (Eigen::Index a = 0; a < r.rows(); ++a) r.row(a) *= s.window.weight(a);
                        const Eigen::MatrixXd slice = r * r.transpose();
                        const auto& idx = s.window.index;
                        for (Eigen::Index b = 0; b < slice.cols(); ++b) {
                          const auto ib = static_cast<Eigen::Index>(idx[b]);
                          for (Eigen::Index a = b; a < slice.rows(); ++a)
                            out.matrix(static_cast<Eigen::Index>(idx[a]), ib) += w[g] * slice(a, b);
                        }
                      });
  out.matrix.triangularView<Eigen::StrictlyUpper>() = out.matrix.transpose();
  out.trace = out.matrix.trace();
  return out;
}

double hstar_trace(const Dataset& data, const FitConfig& config, InfeasiblePolicy policy) {
  config.validate();
  const GridSpec grid = resolve_grid(data, config);
  const std::vector<double> w = grid.trapezoid_weights();
  double trace = 0.0;
  sweep(data, config, grid, policy, [&](std::size_t g, const detail::LocalSolve& s) {
    const Eigen::MatrixXd q = s.wls.whitened();
    double diag = 0.0;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      const double k = s.window.weight(r);
      diag += k * k * q.row(r).squaredNorm();
    }
    trace += w[g] * diag;
  });
  return trace;
}

Eigen::VectorXd projected_response(const HStar& hstar, std::span<const double> y) {
  if (y.size() != hstar.n())
    throw InputError("response length " + std::to_string(y.size()) + " does not match H* size " +
                     std::to_string(hstar.n()));
  const Eigen::Map<const Eigen::VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
  return hstar.matrix * v;
}

Eigen::VectorXd projected_response_direct(const Dataset& data, const FitConfig& config,
                                          InfeasiblePolicy policy) {
  config.validate();
  const GridSpec grid = resolve_grid(data, config);
  const std::vector<double> w = grid.trapezoid_weights();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.size()));
  sweep(data, config, grid, policy, [&](std::size_t g, const detail::LocalSolve& s) {
    for (std::size_t r = 0; r < s.window.index.size(); ++r) {
      const std::size_t i = s.window.index[r];
      out(static_cast<Eigen::Index>(i)) +=
          w[g] * s.fit.fitted(data.x[i]) * s.window.weight(static_cast<Eigen::Index>(r));
    }
  });
  return out;
}

QuadraticFormReport quadratic_form_check(const HStar& hstar, std::span<const double> y,
                                         const GlobalAnova& global) {
  const Eigen::VectorXd hy = projected_response(hstar, y);
  const Eigen::Map<const Eigen::VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
  const double n = static_cast<double>(y.size());
  const double yhy = v.dot(hy);
  const double sum = v.sum();
  QuadraticFormReport r;
  r.sse_quadratic = (v.squaredNorm() - yhy) / n;
  r.ssr_quadratic = (yhy - sum * sum / n) / n;
  r.sse_integrated = global.sse;
  r.ssr_integrated = global.ssr;
  r.sse_gap = std::abs(r.sse_quadratic - r.sse_integrated);
  r.ssr_gap = std::abs(r.ssr_quadratic - r.ssr_integrated);
  r.sse_gap_relative = r.sse_gap / std::max(std::abs(r.sse_integrated), 1e-300);
  r.ssr_gap_relative = r.ssr_gap / std::max(std::abs(r.ssr_integrated), 1e-300);
  return r;
}

std::vector<std::size_t> interior_rows(const HStar& hstar, const Dataset& data,
                                       const FitConfig& config) {
  const double reach = config.kernel.radius() * config.bandwidth;
  std::vector<double> skipped_x;
  for (std::size_t g : hstar.skipped) skipped_x.push_back(hstar.grid.at(g));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double lo = data.x[i] - reach;
    const double hi = data.x[i] + reach;
    if (lo < hstar.grid.start || hi > hstar.grid.stop) continue;
    const bool touches_skip = std::any_of(skipped_x.begin(), skipped_x.end(),
                                          [&](double x) { return x > lo && x < hi; });
    if (!touches_skip) rows.push_back(i);
  }
  return rows;
}

double idempotency_residual(const HStar& hstar, std::span<const double> m_values,
                            std::span<const std::size_t> rows) {
  const Eigen::VectorXd hm = projected_response(hstar, m_values);
  const Eigen::VectorXd hhm = hstar.matrix * hm;
  double worst = 0.0;
  for (std::size_t i : rows) {
    const auto k = static_cast<Eigen::Index>(i);
    worst = std::max(worst, std::abs(hm(k) - hhm(k)));
  }
  return worst;
}

HStarDiagnostics diagnose(const HStar& hstar, const Dataset& data, const FitConfig& config,
                          bool with_centering_gap) {
  HStarDiagnostics d;
  const Eigen::MatrixXd& m = hstar.matrix;
  d.max_asymmetry = (m - m.transpose()).cwiseAbs().maxCoeff();
  const std::vector<std::size_t> interior = interior_rows(hstar, data, config);
  d.interior_count = interior.size();
  std::vector<bool> is_interior(hstar.n(), false);
  for (std::size_t i : interior) is_interior[i] = true;
  const Eigen::VectorXd sums = m.rowwise().sum();
  for (std::size_t i = 0; i < hstar.n(); ++i) {
    const double e = std::abs(sums(static_cast<Eigen::Index>(i)) - 1.0);
    if (is_interior[i]) d.max_interior_row_sum_error = std::max(d.max_interior_row_sum_error, e);
    else d.max_boundary_row_sum_error = std::max(d.max_boundary_row_sum_error, e);
  }
  if (with_centering_gap) {
    const auto n = m.rows();
    const Eigen::MatrixXd l = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd centered = m - l;
    const Eigen::MatrixXd lhs = centered * centered;
    const Eigen::MatrixXd rhs = m * m - l;
    d.centering_gap = (lhs - rhs).cwiseAbs().maxCoeff();
  }
  return d;
}

double asymptotic_hstar_trace(const KernelInfo& info, double range, double h) {
  return range / h * (info.nu.at(0) + info.nu.at(2) / info.mu.at(2));
}

}  // namespace lpanova
