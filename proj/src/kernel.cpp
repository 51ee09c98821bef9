#include "lpanova/kernel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "lpanova/errors.hpp"

namespace lpanova {

namespace {

double double_factorial_odd(int j) {
  // (j-1)!! for even j >= 0
  double r = 1.0;
  for (int k = j - 1; k > 1; k -= 2) r *= k;
  return r;
}

double analytic_k0(const Kernel& k, double v) {
  const double a = std::abs(v);
  switch (k.family()) {
    case KernelFamily::Epanechnikov:
      if (a >= 2.0) return 0.0;
      return 3.0 * std::pow(2.0 - a, 3) * (a * a + 6.0 * a + 4.0) / 160.0;
    case KernelFamily::Uniform:
      if (a >= 2.0) return 0.0;
      return (2.0 - a) / 4.0;
    case KernelFamily::Gaussian:
      return std::exp(-v * v / 4.0) / (2.0 * std::sqrt(std::numbers::pi));
  }
  return 0.0;
}

double analytic_k1(const Kernel& k, double v) {
  const double a = std::abs(v);
  switch (k.family()) {
    case KernelFamily::Epanechnikov:
      if (a >= 2.0) return 0.0;
      return 3.0 * std::pow(2.0 - a, 3) *
             (3.0 * std::pow(a, 4) + 18.0 * std::pow(a, 3) + 30.0 * a * a - 12.0 * a - 8.0) /
             2240.0;
    case KernelFamily::Uniform: {
      if (a >= 2.0) return 0.0;
      const double lo = a - 1.0;
      return (a * (1.0 - lo * lo) / 2.0 - (1.0 - lo * lo * lo) / 3.0) / 4.0;
    }
    case KernelFamily::Gaussian:
      return analytic_k0(k, v) * (v * v / 4.0 - 0.5);
  }
  return 0.0;
}

// Integral of f over the support by Simpson, with a half-resolution rerun
// as the error estimate.
double checked_integral(const std::function<double(double)>& f, double a, double b,
                        const QuadratureSpec& spec, double& error_estimate) {
  const double fine = simpson(f, a, b, spec);
  QuadratureSpec coarse{(spec.nodes + 1) / 2};
  if (coarse.nodes % 2 == 0) ++coarse.nodes;
  error_estimate = std::abs(fine - simpson(f, a, b, coarse)) / 15.0;
  return fine;
}

Tabulated tabulate_convolution(const Kernel& k, bool first_moment, std::size_t nodes,
                               const QuadratureSpec& spec) {
  const double r = k.radius();
  Tabulated t;
  t.start = -2.0 * r;
  t.step = 4.0 * r / static_cast<double>(nodes - 1);
  t.values.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double v = (i + 1 == nodes) ? 2.0 * r : t.start + static_cast<double>(i) * t.step;
    const double lo = std::max(-r, v - r);
    const double hi = std::min(r, v + r);
    if (hi <= lo) {
      t.values[i] = 0.0;
      continue;
    }
    auto integrand = [&](double u) {
      const double w = k.eval(u) * k.eval(v - u);
      return first_moment ? u * (v - u) * w : w;
    };
    t.values[i] = simpson(integrand, lo, hi, spec);
  }
  return t;
}

}  // namespace

Kernel Kernel::parse(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "epanechnikov") return Kernel(KernelFamily::Epanechnikov);
  if (lower == "gaussian") return Kernel(KernelFamily::Gaussian);
  if (lower == "uniform") return Kernel(KernelFamily::Uniform);
  throw InputError("unknown kernel '" + std::string(name) +
                   "' (expected epanechnikov, gaussian or uniform)");
}

std::string Kernel::name() const {
  switch (family_) {
    case KernelFamily::Epanechnikov: return "epanechnikov";
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Uniform: return "uniform";
  }
  return "unknown";
}

double Kernel::radius() const {
  return family_ == KernelFamily::Gaussian ? kGaussianTruncation : 1.0;
}

double Kernel::eval(double u) const {
  switch (family_) {
    case KernelFamily::Epanechnikov: return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::Uniform: return std::abs(u) <= 1.0 ? 0.5 : 0.0;
    case KernelFamily::Gaussian:
      if (std::abs(u) >= kGaussianTruncation) return 0.0;
      return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  }
  return 0.0;
}

double Tabulated::operator()(double v) const {
  if (values.empty() || v < start || v > stop()) return 0.0;
  const double pos = (v - start) / step;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

double analytic_moment(const Kernel& k, int j) {
  if (j < 0) throw InputError("moment order must be nonnegative");
  if (j % 2 == 1) return 0.0;
  const double jd = j;
  switch (k.family()) {
    case KernelFamily::Epanechnikov: return 3.0 / ((jd + 1.0) * (jd + 3.0));
    case KernelFamily::Uniform: return 1.0 / (jd + 1.0);
    case KernelFamily::Gaussian: return double_factorial_odd(j);
  }
  return 0.0;
}

double analytic_squared_moment(const Kernel& k, int j) {
  if (j < 0) throw InputError("moment order must be nonnegative");
  if (j % 2 == 1) return 0.0;
  const double jd = j;
  switch (k.family()) {
    case KernelFamily::Epanechnikov:
      return 1.125 * (1.0 / (jd + 1.0) - 2.0 / (jd + 3.0) + 1.0 / (jd + 5.0));
    case KernelFamily::Uniform: return 1.0 / (2.0 * (jd + 1.0));
    case KernelFamily::Gaussian:
      return double_factorial_odd(j) * std::pow(0.5, jd / 2.0) /
             (2.0 * std::sqrt(std::numbers::pi));
  }
  return 0.0;
}

KernelInfo kernel_info(const Kernel& kernel, int degree, const KernelInfoOptions& options) {
  if (degree < 0) throw InputError("polynomial degree must be >= 0");
  options.quadrature.validate();
  if (options.convolution_nodes < 3 || options.convolution_nodes % 2 == 0)
    throw InputError("convolution table needs an odd node count >= 3");

  KernelInfo info;
  info.kernel = kernel;
  info.degree = degree;
  const double r = kernel.radius();
  const int orders = 2 * degree + 3;
  info.mu.resize(orders);
  info.nu.resize(orders);

  auto crosscheck = [&](double numeric, double analytic, double err_estimate, const char* what,
                        int j) {
    const double scale = std::max(1.0, std::abs(analytic));
    const double gap = std::abs(numeric - analytic) / scale;
    info.max_crosscheck_error = std::max(info.max_crosscheck_error, gap);
    if (gap > options.crosscheck_tolerance || err_estimate / scale > options.crosscheck_tolerance)
      throw QuadratureError(std::string(what) + "_" + std::to_string(j) + " for " + kernel.name() +
                                " failed to converge",
                            std::max(gap, err_estimate / scale));
  };

  for (int j = 0; j < orders; ++j) {
    double err = 0.0;
    const double mu = checked_integral(
        [&](double u) { return std::pow(u, j) * kernel.eval(u); }, -r, r, options.quadrature, err);
    crosscheck(mu, analytic_moment(kernel, j), err, "mu", j);
    info.mu[j] = (j % 2 == 1) ? 0.0 : mu;

    const double nu = checked_integral(
        [&](double u) {
          const double kv = kernel.eval(u);
          return std::pow(u, j) * kv * kv;
        },
        -r, r, options.quadrature, err);
    crosscheck(nu, analytic_squared_moment(kernel, j), err, "nu", j);
    info.nu[j] = (j % 2 == 1) ? 0.0 : nu;
  }

  info.k0conv = tabulate_convolution(kernel, false, options.convolution_nodes, options.quadrature);
  info.k1conv = tabulate_convolution(kernel, true, options.convolution_nodes, options.quadrature);
  for (std::size_t i = 0; i < info.k0conv.values.size(); ++i) {
    const double v = info.k0conv.start + static_cast<double>(i) * info.k0conv.step;
    crosscheck(info.k0conv.values[i], analytic_k0(kernel, v), 0.0, "K0*", static_cast<int>(i));
    crosscheck(info.k1conv.values[i], analytic_k1(kernel, v), 0.0, "K1*", static_cast<int>(i));
  }

  const std::size_t m = info.k0conv.values.size();
  std::vector<double> a(m), b(m), c(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double k0 = info.k0conv.values[i];
    const double k1 = info.k1conv.values[i];
    a[i] = k0 * k0;
    b[i] = k0 * k1;
    c[i] = k1 * k1;
  }
  const double mu2 = info.mu[2];
  const double step = info.k0conv.step;
  info.kappa0 = simpson_tabulated(a, step) - 2.0 / mu2 * simpson_tabulated(b, step) +
                simpson_tabulated(c, step) / (mu2 * mu2);
  return info;
}

double variance_inflation_ratio(const Kernel& kernel, const KernelInfoOptions& options) {
  const KernelInfo info = kernel_info(kernel, 1, options);
  return info.kappa0 / info.nu[0];
}

}  // namespace lpanova
