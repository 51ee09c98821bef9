#include "lpanova/vcm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lpanova/errors.hpp"
#include "weighted_ls.hpp"

namespace lpanova {

namespace {

struct VcmSolve {
  detail::Window window;
  detail::WeightedLeastSquares wls;
  VcmFit fit;
};

Eigen::MatrixXd vcm_design(const VcmDataset& data, const detail::Window& window, double u0,
                           double h, int degree) {
  const auto rows = static_cast<Eigen::Index>(window.index.size());
  const auto d = static_cast<Eigen::Index>(data.d());
  const int q = degree + 1;
  Eigen::MatrixXd z(rows, d * q);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto i = static_cast<Eigen::Index>(window.index[r]);
    const double t = (data.u[window.index[r]] - u0) / h;
    for (Eigen::Index k = 0; k < d; ++k) {
      double power = 1.0;
      for (int j = 0; j < q; ++j) {
        z(r, k * q + j) = data.x(i, k) * power;
        power *= t;
      }
    }
  }
  return z;
}

VcmSolve solve_vcm(const VcmDataset& data, double u0, const FitConfig& config) {
  const double h = config.bandwidth;
  const int p = config.degree;
  detail::Window window = detail::kernel_window(data.u, u0, h, config.kernel);
  if (window.index.empty()) {
    std::ostringstream msg;
    msg << "no observations within the kernel window at u0=" << u0;
    throw EmptyWindow(msg.str());
  }
  if (window.distinct < static_cast<std::size_t>(p) + 1) {
    std::ostringstream msg;
    msg << "only " << window.distinct << " distinct weighted u values at u0=" << u0
        << " for degree " << p;
    throw SingularDesign(msg.str());
  }
  detail::WeightedLeastSquares wls(vcm_design(data, window, u0, h, p), window.weight);
  Eigen::VectorXd y(static_cast<Eigen::Index>(window.index.size()));
  for (std::size_t r = 0; r < window.index.size(); ++r)
    y(static_cast<Eigen::Index>(r)) = data.y[window.index[r]];
  const Eigen::VectorXd scaled = wls.fit(y);

  const auto d = static_cast<Eigen::Index>(data.d());
  VcmFit fit;
  fit.u0 = u0;
  fit.beta.resize(d, p + 1);
  for (Eigen::Index k = 0; k < d; ++k) {
    double hp = 1.0;
    for (int j = 0; j <= p; ++j) {
      fit.beta(k, j) = scaled(k * (p + 1) + j) / hp;
      hp *= h;
    }
  }
  fit.a_hat = fit.beta.col(0);
  fit.ghat = window.weight_sum / static_cast<double>(data.size());
  fit.n_eff = window.index.size();
  fit.condition = wls.condition();
  return VcmSolve{std::move(window), std::move(wls), std::move(fit)};
}

template <typename OnSlice>
std::vector<PointFailure> sweep(const VcmDataset& data, const FitConfig& config,
                                const GridSpec& grid, InfeasiblePolicy policy, OnSlice&& on_slice) {
  std::vector<PointFailure> failures;
  for (std::size_t g = 0; g < grid.count; ++g) {
    std::optional<VcmSolve> solve;
    try {
      solve.emplace(solve_vcm(data, grid.at(g), config));
    } catch (const SingularDesign& e) {
      if (policy == InfeasiblePolicy::Fail)
        throw SingularDesign(std::string(e.what()) + " (grid index " + std::to_string(g) + ")", g);
      failures.push_back({g, FailureKind::SingularDesign, e.what()});
      continue;
    } catch (const EmptyWindow& e) {
      if (policy == InfeasiblePolicy::Fail)
        throw SingularDesign(std::string(e.what()) + " (grid index " + std::to_string(g) + ")", g);
      failures.push_back({g, FailureKind::EmptyWindow, e.what()});
      continue;
    }
    on_slice(g, *solve);
  }
  return failures;
}

GridSpec vcm_grid(const VcmDataset& data, const FitConfig& config) {
  if (config.grid) return *config.grid;
  const auto [lo, hi] = std::minmax_element(data.u.begin(), data.u.end());
  GridSpec g{*lo, *hi, config.grid_count};
  g.validate();
  return g;
}

}  // namespace

VcmDataset VcmDataset::make(std::vector<double> u, Eigen::MatrixXd x, std::vector<double> y) {
  VcmDataset d{std::move(u), std::move(x), std::move(y)};
  d.validate();
  return d;
}

VcmDataset VcmDataset::with_intercept(std::vector<double> u, const Eigen::MatrixXd& covariates,
                                      std::vector<double> y) {
  const Eigen::Index n = static_cast<Eigen::Index>(u.size());
  if (covariates.rows() != n && covariates.cols() > 0)
    throw InputError("covariate rows do not match the index variable length");
  Eigen::MatrixXd x(n, covariates.cols() + 1);
  x.col(0).setOnes();
  if (covariates.cols() > 0) x.rightCols(covariates.cols()) = covariates;
  return make(std::move(u), std::move(x), std::move(y));
}

void VcmDataset::validate() const {
  const std::size_t n = u.size();
  if (y.size() != n || static_cast<std::size_t>(x.rows()) != n)
    throw InputError("VCM dimensions are inconsistent");
  if (n < 2) throw InputError("need at least 2 observations");
  if (x.cols() < 1) throw InputError("VCM needs at least the intercept covariate");
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (x(r, 0) != 1.0)
      throw InputError("first covariate column must be identically 1 (row " + std::to_string(i + 1) + ")");
    if (!std::isfinite(u[i]) || !std::isfinite(y[i]) || !x.row(r).allFinite())
      throw InputError("non-finite value at observation " + std::to_string(i + 1));
  }
}

double VcmDataset::mean_y() const {
  return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

double VcmFit::fitted(const VcmDataset& data, std::size_t i) const {
  const double t = data.u[i] - u0;
  const auto row = static_cast<Eigen::Index>(i);
  double total = 0.0;
  for (Eigen::Index k = 0; k < beta.rows(); ++k) {
    double acc = 0.0;
    for (Eigen::Index j = beta.cols() - 1; j >= 0; --j) acc = acc * t + beta(k, j);
    total += data.x(row, k) * acc;
  }
  return total;
}

VcmFit vcm_local_fit(const VcmDataset& data, double u0, const FitConfig& config) {
  config.validate();
  return solve_vcm(data, u0, config).fit;
}

LocalAnova vcm_local_anova(const VcmDataset& data, const VcmFit& fit, const FitConfig& config) {
  if (!(fit.ghat > 0.0)) throw EmptyWindow("VCM local ANOVA needs ghat > 0");
  const double ybar = data.mean_y();
  double sw = 0.0, sst = 0.0, sse = 0.0, ssr = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = config.kernel.scaled(data.u[i] - fit.u0, config.bandwidth);
    if (k == 0.0) continue;
    const double yhat = fit.fitted(data, i);
    const double dt = data.y[i] - ybar;
    const double de = data.y[i] - yhat;
    const double dr = yhat - ybar;
    sw += k;
    sst += dt * dt * k;
    sse += de * de * k;
    ssr += dr * dr * k;
  }
  LocalAnova a;
  a.x0 = fit.u0;
  a.fhat = fit.ghat;
  a.sst = sst / sw;
  a.sse = sse / sw;
  a.ssr = ssr / sw;
  if (a.sst > r2_tolerance(ybar)) a.r2 = local_r2(a, ybar);
  return a;
}

HStar vcm_hstar(const VcmDataset& data, const FitConfig& config, const HStarOptions& options) {
  config.validate();
  const std::size_t n = data.size();
  if (n > options.max_n)
    throw CapacityError("H_u* for n=" + std::to_string(n) + " exceeds the configured cap of " +
                        std::to_string(options.max_n));
  HStar out;
  out.grid = vcm_grid(data, config);
  out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const std::vector<double> w = out.grid.trapezoid_weights();
  const auto failures = sweep(data, config, out.grid, options.policy, [&](std::size_t g, const VcmSolve& s) {
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
  for (const auto& f : failures) out.skipped.push_back(f.grid_index);
  out.matrix.triangularView<Eigen::StrictlyUpper>() = out.matrix.transpose();
  out.trace = out.matrix.trace();
  return out;
}

VcmGlobalAnova vcm_global(const VcmDataset& data, const FitConfig& config, const VcmOptions& options) {
  config.validate();
  const GridSpec grid = vcm_grid(data, config);
  std::vector<std::optional<LocalAnova>> points(grid.count);
  VcmGlobalAnova out;
  out.d = data.d();
  out.failures = sweep(data, config, grid, InfeasiblePolicy::Skip, [&](std::size_t g, const VcmSolve& s) {
    points[g] = vcm_local_anova(data, s.fit, config);
  });
  out.global = integrate_anova(points, grid, data.size(), sample_sst(data.y));
  if (options.assemble_hstar) {
    FitConfig on_grid = config;
    on_grid.grid = grid;
    const HStar hu = vcm_hstar(data, on_grid, {InfeasiblePolicy::Skip, options.max_n});
    out.hu_trace = hu.trace;
    out.quadratic_check = quadratic_form_check(hu, data.y, out.global);
  }
  return out;
}

}  // namespace lpanova
