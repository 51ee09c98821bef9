#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "lpanova/errors.hpp"
#include "lpanova/vcm.hpp"

using namespace lpanova;

namespace {

FitConfig config(int p, double h, KernelFamily k = KernelFamily::Epanechnikov) {
  FitConfig c;
  c.degree = p;
  c.bandwidth = h;
  c.kernel = Kernel(k);
  return c;
}

// y = Σ a_k(u) x_k + σ ε with a₁ = 1 + u, a₂ = sin 2πu, a₃ = 2 - u².
VcmDataset random_vcm(std::mt19937_64& rng, std::size_t n, std::size_t d, double sigma) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> u(n), y(n);
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d - 1));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    u[i] = unit(rng);
    double v = 1.0 + u[i];
    for (std::size_t k = 1; k < d; ++k) {
      cov(r, static_cast<Eigen::Index>(k - 1)) = z(rng);
      const double a = k == 1 ? std::sin(2 * M_PI * u[i]) : 2.0 - u[i] * u[i];
      v += a * cov(r, static_cast<Eigen::Index>(k - 1));
    }
    y[i] = v + sigma * z(rng);
  }
  return VcmDataset::with_intercept(std::move(u), cov, std::move(y));
}

}  // namespace

TEST_CASE("dataset validation") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0.5, 1, 0.2, 2, 0.1;
  CHECK_THROWS_AS(VcmDataset::make({0, 1, 2}, x, {1, 2, 3}), InputError);
  CHECK_THROWS_AS(VcmDataset::with_intercept({0, 1, 2}, Eigen::MatrixXd(2, 1), {1, 2, 3}), InputError);
  const VcmDataset ok = VcmDataset::with_intercept({0, 1, 2}, Eigen::MatrixXd(3, 0), {1, 2, 3});
  CHECK(ok.d() == 1);
}

TEST_CASE("d = 1 reduces to the bivariate model") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset d = testutil::uniform_data(rng, 30 + trial, testutil::sin2pi, 0.4);
    const VcmDataset v = VcmDataset::with_intercept(d.x, Eigen::MatrixXd(d.size(), 0), d.y);
    const FitConfig c = config(trial % 3, 0.2 + 0.005 * trial,
                               trial % 2 ? KernelFamily::Gaussian : KernelFamily::Epanechnikov);
    for (double x0 : {0.1, 0.45, 0.8}) {
      const LocalFit a = local_fit(d, x0, c);
      const VcmFit b = vcm_local_fit(v, x0, c);
      for (int j = 0; j <= c.degree; ++j) CHECK(std::abs(a.beta[j] - b.beta(0, j)) <= 1e-12 * std::max(1.0, std::abs(a.beta[j])));
      CHECK(a.fhat == b.ghat);
      const LocalAnova la = local_anova(d, a, c);
      const LocalAnova lb = vcm_local_anova(v, b, c);
      CHECK(std::abs(la.sse - lb.sse) <= 1e-12 * la.sst);
      CHECK(std::abs(la.ssr - lb.ssr) <= 1e-12 * la.sst);
      CHECK(la.sst == lb.sst);
    }
    const GlobalAnova ga = global_anova(d, c, false);
    const VcmGlobalAnova gb = vcm_global(v, c);
    CHECK(std::abs(ga.sse - gb.global.sse) <= 1e-12 * ga.sst_integrated);
    CHECK(std::abs(ga.ssr - gb.global.ssr) <= 1e-12 * ga.sst_integrated);
    CHECK(std::abs(ga.r2 - gb.global.r2) <= 1e-12);
  }
}

TEST_CASE("d = 1 H_u* equals H*") {
  std::mt19937_64 rng(2);
  const Dataset d = testutil::uniform_data(rng, 60, testutil::sin2pi, 0.4);
  const VcmDataset v = VcmDataset::with_intercept(d.x, Eigen::MatrixXd(d.size(), 0), d.y);
  const FitConfig c = config(1, 0.25);
  const HStar a = hstar(d, c);
  const HStar b = vcm_hstar(v, c);
  CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("constant coefficients with all weights equal give OLS") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::size_t n = 40;
  std::vector<double> u(n), y(n);
  Eigen::MatrixXd cov(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = static_cast<double>(i) / n;
    cov(i, 0) = z(rng);
    cov(i, 1) = z(rng);
    y[i] = 1.5 - 2.0 * cov(i, 0) + 0.25 * cov(i, 1) + 0.3 * z(rng);
  }
  const VcmDataset v = VcmDataset::with_intercept(u, cov, y);
  const Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::VectorXd ols = v.x.colPivHouseholderQr().solve(yy);
  const VcmFit fit = vcm_local_fit(v, 0.5, config(0, 50.0, KernelFamily::Uniform));
  for (int k = 0; k < 3; ++k) CHECK(std::abs(fit.a_hat(k) - ols(k)) < 1e-10);
}

TEST_CASE("coefficients linear in u are recovered exactly") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::size_t n = 200;
  std::vector<double> u(n), y(n);
  Eigen::MatrixXd cov(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = unit(rng);
    cov(i, 0) = z(rng);
    y[i] = 2.0 + 3.0 * u[i] * cov(i, 0);
  }
  const VcmDataset v = VcmDataset::with_intercept(u, cov, y);
  const FitConfig c = config(1, 0.15);
  for (double u0 : {0.2, 0.5, 0.8}) {
    const VcmFit fit = vcm_local_fit(v, u0, c);
    CHECK(std::abs(fit.a_hat(0) - 2.0) < 1e-6);
    CHECK(std::abs(fit.a_hat(1) - 3.0 * u0) < 1e-6);
    CHECK((fit.a_hat - fit.beta.col(0)).cwiseAbs().maxCoeff() == 0.0);
    const LocalAnova la = vcm_local_anova(v, fit, c);
    CHECK(la.sse < 1e-20);
    CHECK(*la.r2 == doctest::Approx(1.0));
  }
  CHECK(vcm_global(v, c).global.r2 == doctest::Approx(1.0));
}

TEST_CASE("decomposition and residual orthogonality with d = 3") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const VcmDataset v = random_vcm(rng, 150, 3, 0.5);
    const FitConfig c = config(1, 0.2);
    const double ybar = v.mean_y();
    for (double u0 : {0.15, 0.5, 0.85}) {
      const VcmFit fit = vcm_local_fit(v, u0, c);
      const LocalAnova la = vcm_local_anova(v, fit, c);
      double sw = 0, sst = 0, sse = 0, ssr = 0;
      std::vector<double> orth(6, 0.0), mag(6, 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double k = c.kernel.scaled(v.u[i] - u0, c.bandwidth);
        if (k == 0.0) continue;
        const double yhat = fit.fitted(v, i);
        sw += k;
        sst += k * (v.y[i] - ybar) * (v.y[i] - ybar);
        sse += k * (v.y[i] - yhat) * (v.y[i] - yhat);
        ssr += k * (yhat - ybar) * (yhat - ybar);
        for (int col = 0; col < 6; ++col) {
          const double zc = v.x(static_cast<Eigen::Index>(i), col / 2) *
                            std::pow((v.u[i] - u0) / c.bandwidth, col % 2);
          orth[col] += k * (v.y[i] - yhat) * zc;
          mag[col] += std::abs(k * v.y[i] * zc);
        }
      }
      CHECK(std::abs(sst / sw - la.sst) <= 1e-12 * la.sst);
      CHECK(std::abs(sse / sw - la.sse) <= 1e-12 * la.sst);
      CHECK(std::abs(ssr / sw - la.ssr) <= 1e-12 * la.sst);
      CHECK(std::abs(la.sst - la.sse - la.ssr) <= 1e-9 * la.sst);
      for (int col = 0; col < 6; ++col) CHECK(std::abs(orth[col]) <= 1e-8 * mag[col]);
    }
    const VcmGlobalAnova g = vcm_global(v, c);
    CHECK(std::abs(g.global.sse + g.global.ssr - g.global.sst_integrated) <= 1e-9 * g.global.sst_integrated);
  }
}

TEST_CASE("rescaling a covariate rescales its coefficients only") {
  std::mt19937_64 rng(6);
  const VcmDataset v = random_vcm(rng, 120, 3, 0.5);
  VcmDataset w = v;
  w.x.col(2) *= 4.0;
  const FitConfig c = config(1, 0.25);
  for (double u0 : {0.3, 0.6}) {
    const VcmFit a = vcm_local_fit(v, u0, c);
    const VcmFit b = vcm_local_fit(w, u0, c);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(b.beta(2, j) - a.beta(2, j) / 4.0) < 1e-9 * std::max(1.0, std::abs(a.beta(2, j))));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(a.fitted(v, i) - b.fitted(w, i)) < 1e-9);
    const LocalAnova la = vcm_local_anova(v, a, c);
    const LocalAnova lb = vcm_local_anova(w, b, c);
    CHECK(std::abs(la.sse - lb.sse) < 1e-9);
    CHECK(std::abs(*la.r2 - *lb.r2) < 1e-9);
  }
}

TEST_CASE("collinear covariates are singular") {
  std::mt19937_64 rng(7);
  VcmDataset v = random_vcm(rng, 80, 3, 0.5);
  v.x.col(2) = 2.0 * v.x.col(1);
  CHECK_THROWS_AS(vcm_local_fit(v, 0.5, config(1, 0.3)), SingularDesign);
}

TEST_CASE("optional H_u* assembly") {
  std::mt19937_64 rng(8);
  const VcmDataset v = random_vcm(rng, 100, 2, 0.5);
  const FitConfig c = config(1, 0.3);
  CHECK_FALSE(vcm_global(v, c).hu_trace.has_value());
  const VcmGlobalAnova g = vcm_global(v, c, {true, 5000});
  REQUIRE(g.hu_trace);
  CHECK(*g.hu_trace > 2.0);
  REQUIRE(g.quadratic_check);
  const HStar hu = vcm_hstar(v, c);
  CHECK((hu.matrix - hu.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("global SSE matches its exact noise expectation") {
  // SSE is a quadratic form yᵀAy, so E[SSE(m + σε)] = SSE(m) + σ² Σ_i SSE(e_i).
  std::mt19937_64 rng(9);
  const std::size_t n = 150;
  const int reps = 300;
  const FitConfig c = config(1, std::pow(static_cast<double>(n), -1.0 / 3.0));
  const VcmDataset clean = random_vcm(rng, n, 3, 0.0);
  auto sse_of = [&](std::vector<double> y) {
    return vcm_global(VcmDataset::make(clean.u, clean.x, std::move(y)), c).global.sse;
  };
  double trace_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    trace_a += sse_of(e);
  }
  const double expected = sse_of(clean.y) + trace_a;
  std::normal_distribution<double> z(0.0, 1.0);
  double mean = 0.0, sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> y = clean.y;
    for (double& v : y) v += z(rng);
    const double s = sse_of(std::move(y));
    mean += s / reps;
    sq += s * s / reps;
  }
  const double se = std::sqrt((sq - mean * mean) / (reps - 1));
  MESSAGE("mean SSE " << mean << ", expected " << expected << " (MC SE " << se << ")");
  CHECK(trace_a < 1.0);
  CHECK(std::abs(mean - expected) < 4.0 * se);
}
