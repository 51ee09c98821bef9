#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "lpanova/errors.hpp"
#include "lpanova/kernel.hpp"

using namespace lpanova;
using boost::math::quadrature::gauss_kronrod;

namespace {

const Kernel epa{KernelFamily::Epanechnikov};
const Kernel gau{KernelFamily::Gaussian};
const Kernel uni{KernelFamily::Uniform};

double integrate(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

// Piecewise integration that respects kernel kinks.
double integrate_kernel(const Kernel& k, const std::function<double(double)>& f) {
  if (k.family() == KernelFamily::Gaussian) return integrate(f, -8.0, 8.0);
  return integrate(f, -1.0, 1.0);
}

// Convolutions of the Epanechnikov kernel, derived symbolically.
double epa_k0(double v) {
  const double a = std::abs(v);
  if (a >= 2.0) return 0.0;
  return 3.0 * std::pow(2.0 - a, 3) * (a * a + 6.0 * a + 4.0) / 160.0;
}

double epa_k1(double v) {
  const double a = std::abs(v);
  if (a >= 2.0) return 0.0;
  return 3.0 * std::pow(2.0 - a, 3) * (3 * a * a * a * a + 18 * a * a * a + 30 * a * a - 12 * a - 8) /
         2240.0;
}

}  // namespace

TEST_CASE("eval at reference points") {
  CHECK(eval(epa, 0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(eval(epa, 1.2) == 0.0);
  CHECK(eval(uni, 0.5) == 0.5);
  CHECK(eval(uni, 1.5) == 0.0);
  CHECK(eval(gau, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
  CHECK(eval(gau, 8.5) == 0.0);
}

TEST_CASE("parse accepts names case-insensitively and rejects others") {
  CHECK(Kernel::parse("Gaussian") == gau);
  CHECK(Kernel::parse("epanechnikov").name() == "epanechnikov");
  CHECK_THROWS_AS(Kernel::parse("triweight"), InputError);
}

TEST_CASE("symmetry and normalization") {
  for (const Kernel& k : {epa, gau, uni}) {
    for (double u = -9.0; u <= 9.0; u += 0.173) CHECK(eval(k, u) == eval(k, -u));
    for (double u = -9.0; u <= 9.0; u += 0.173) CHECK(eval(k, u) >= 0.0);
    // Trapezoid over the support, fine enough that the rule error is below 1e-10.
    const double r = k.radius();
    const int m = 400000;
    const double step = 2.0 * r / m;
    double s = 0.5 * (eval(k, -r) + eval(k, r));
    for (int i = 1; i < m; ++i) s += eval(k, -r + i * step);
    CHECK(std::abs(s * step - 1.0) < 1e-10);
  }
}

TEST_CASE("closed-form moments") {
  CHECK(analytic_moment(epa, 2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(analytic_squared_moment(epa, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(analytic_squared_moment(epa, 2) == doctest::Approx(3.0 / 35.0).epsilon(1e-15));
  CHECK(analytic_moment(uni, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(analytic_squared_moment(uni, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(analytic_moment(gau, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(analytic_moment(gau, 1) == 0.0);
}

TEST_CASE("kernel_info moments match an independent quadrature") {
  for (const Kernel& k : {epa, gau, uni}) {
    for (int p : {0, 1, 2, 3}) {
      const KernelInfo info = kernel_info(k, p);
      REQUIRE(info.mu.size() == static_cast<std::size_t>(2 * p + 3));
      REQUIRE(info.nu.size() == info.mu.size());
      CHECK(std::abs(info.mu[0] - 1.0) < 1e-12);
      for (std::size_t j = 0; j < info.mu.size(); ++j) {
        const double mu = integrate_kernel(k, [&](double u) { return std::pow(u, j) * eval(k, u); });
        const double nu =
            integrate_kernel(k, [&](double u) { return std::pow(u, j) * eval(k, u) * eval(k, u); });
        CHECK(std::abs(info.mu[j] - mu) < 1e-10 * std::max(1.0, std::abs(mu)));
        CHECK(std::abs(info.nu[j] - nu) < 1e-10 * std::max(1.0, std::abs(nu)));
        if (j % 2 == 1) {
          CHECK(std::abs(info.mu[j]) < 1e-12);
          CHECK(std::abs(info.nu[j]) < 1e-12);
        }
      }
      CHECK(info.max_crosscheck_error < 1e-8);
    }
  }
}

TEST_CASE("convolution tables") {
  for (const Kernel& k : {epa, gau, uni}) {
    const KernelInfo info = kernel_info(k, 1);
    double mass = 0.0;
    const auto& t = info.k0conv;
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      const double w = (i == 0 || i + 1 == t.values.size()) ? 0.5 : 1.0;
      mass += w * t.values[i];
    }
    CHECK(std::abs(mass * t.step - 1.0) < 1e-8);
    CHECK(std::abs(info.k0conv(0.0) - info.nu[0]) < 1e-8);
    CHECK(info.kappa0 >= 0.0);
  }
}

TEST_CASE("Epanechnikov convolutions agree with their closed forms") {
  const KernelInfo info = kernel_info(epa, 1);
  for (double v = -2.2; v <= 2.2; v += 0.0137) {
    CHECK(std::abs(info.k0conv(v) - epa_k0(v)) < 1e-6);
    CHECK(std::abs(info.k1conv(v) - epa_k1(v)) < 1e-6);
  }
}

TEST_CASE("Gaussian convolutions agree with their closed forms") {
  const KernelInfo info = kernel_info(gau, 1);
  auto k0 = [](double v) { return std::exp(-v * v / 4.0) / (2.0 * std::sqrt(M_PI)); };
  auto k1 = [&](double v) { return k0(v) * (v * v / 4.0 - 0.5); };
  const auto& t = info.k0conv;
  for (std::size_t i = 0; i < t.values.size(); i += 7) {
    const double v = t.start + static_cast<double>(i) * t.step;
    CHECK(std::abs(info.k0conv.values[i] - k0(v)) < 1e-10);
    CHECK(std::abs(info.k1conv.values[i] - k1(v)) < 1e-10);
  }
  // Linear interpolation error is at most step²/8 · max|f''|, and both
  // second derivatives are bounded by 1/2.
  const double interp = t.step * t.step / 16.0 + 1e-10;
  for (double v = -6.0; v <= 6.0; v += 0.0371) {
    CHECK(std::abs(info.k0conv(v) - k0(v)) < interp);
    CHECK(std::abs(info.k1conv(v) - k1(v)) < interp);
  }
}

TEST_CASE("variance inflation ratios") {
  // κ₀ for the Epanechnikov kernel from the closed-form convolutions.
  const double mu2 = 0.2;
  const double kappa0 = integrate(
      [&](double v) {
        const double a = epa_k0(v) - epa_k1(v) / mu2;
        return a * a;
      },
      -2.0, 2.0);
  const double ratio_epa = variance_inflation_ratio(epa);
  CHECK(std::abs(ratio_epa - kappa0 / 0.6) < 1e-6);
  CHECK(std::abs(ratio_epa - 1.38) <= 0.01);

  // Gaussian: ∫(K₀* - K₁*)² reduces to Gaussian integrals, κ₀/ν₀ = 27/(16√2).
  CHECK(std::abs(variance_inflation_ratio(gau) - 27.0 / (16.0 * std::sqrt(2.0))) < 1e-6);
  CHECK(variance_inflation_ratio(uni) >= 1.0);
}

TEST_CASE("kernel_info is reproducible bit for bit") {
  const KernelInfo a = kernel_info(gau, 2);
  const KernelInfo b = kernel_info(gau, 2);
  CHECK(a.mu == b.mu);
  CHECK(a.nu == b.nu);
  CHECK(a.k0conv.values == b.k0conv.values);
  CHECK(a.k1conv.values == b.k1conv.values);
  CHECK(a.kappa0 == b.kappa0);
}

TEST_CASE("invalid quadrature specs are rejected") {
  KernelInfoOptions opt;
  opt.quadrature.nodes = 2000;
  CHECK_THROWS_AS(kernel_info(epa, 1, opt), InputError);
  CHECK_THROWS_AS(kernel_info(epa, -1), InputError);
}
