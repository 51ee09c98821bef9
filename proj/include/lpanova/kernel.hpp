#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lpanova/grid.hpp"

namespace lpanova {

enum class KernelFamily { Epanechnikov, Gaussian, Uniform };

/// Symmetric probability density used for local weights.
///
/// The Gaussian is truncated at |u| >= 8 everywhere (evaluation and
/// quadrature); the discarded tail mass is below 1.3e-15.
class Kernel {
 public:
  static constexpr double kGaussianTruncation = 8.0;

  explicit Kernel(KernelFamily family = KernelFamily::Epanechnikov) : family_(family) {}

  /// Accepts "epanechnikov", "gaussian" or "uniform" (case-insensitive).
  static Kernel parse(std::string_view name);

  KernelFamily family() const { return family_; }
  std::string name() const;

  /// Half-width of the support: 1 for compact kernels, 8 for the truncated Gaussian.
  double radius() const;

  /// K(u); zero outside the support.
  double eval(double u) const;
  double operator()(double u) const { return eval(u); }

  /// K_h(d) = K(d/h)/h.
  double scaled(double d, double h) const { return eval(d / h) / h; }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  KernelFamily family_;
};

inline double eval(const Kernel& kernel, double u) { return kernel.eval(u); }

/// A function tabulated on a uniform grid, linearly interpolated between
/// nodes and zero outside the tabulated range.
struct Tabulated {
  double start = 0.0;
  double step = 1.0;
  std::vector<double> values;

  double operator()(double v) const;
  double stop() const { return start + step * static_cast<double>(values.size() - 1); }
};

/// Kernel constants consumed by the asymptotic formulas.
struct KernelInfo {
  Kernel kernel;
  int degree = 1;
  std::vector<double> mu;  // μ_j = ∫ u^j K(u) du, j = 0..2p+2
  std::vector<double> nu;  // ν_j = ∫ u^j K(u)^2 du
  Tabulated k0conv;        // K₀*(v) = ∫ K(u) K(v-u) du
  Tabulated k1conv;        // K₁*(v) = ∫ uK(u) (v-u)K(v-u) du
  double kappa0 = 0.0;
  /// Largest disagreement seen between analytic and quadrature values.
  double max_crosscheck_error = 0.0;
};

struct KernelInfoOptions {
  QuadratureSpec quadrature{};
  std::size_t convolution_nodes = 4001;
  /// Analytic and quadrature values must agree to this relative tolerance.
  double crosscheck_tolerance = 1e-8;
};

KernelInfo kernel_info(const Kernel& kernel, int degree, const KernelInfoOptions& options = {});

/// Closed-form μ_j and ν_j of the untruncated family.
double analytic_moment(const Kernel& kernel, int j);
double analytic_squared_moment(const Kernel& kernel, int j);

/// κ₀/ν₀: variance constant of the projected response relative to the
/// local linear estimator.
double variance_inflation_ratio(const Kernel& kernel, const KernelInfoOptions& options = {});

}  // namespace lpanova
