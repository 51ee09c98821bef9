#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpanova/inference.hpp"
#include "lpanova/lpfit.hpp"

namespace lpanova {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t v);

/// Seed of replicate `index` derived from the study's base seed.
std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t index);

/// Standard normal quantile (Wichura's AS241, relative accuracy ~1e-16).
double normal_quantile(double p);

/// Counter-based stream: draw k of (seed, stream) is a pure function of
/// (seed, stream, k), so streams can be split and replayed freely.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double normal() { return normal_quantile(uniform()); }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

enum class Family {
  Bump,         // Y = 2 - 5(X - e^{-100(X-0.5)²}) + σε,           X ~ U(0,1)
  TwistedPear,  // Y = 5 + 0.1X e^{5-0.5X} + ((1+0.5X)/3) σε,       X ~ N(1.2, 1/9)
  BumpScaled,   // Y = 2 - a(X - e^{-100(X-0.5)²}) + σε
  PearScaled,   // Y = 5 + aX e^{5-0.5X} + ((1+0.5X)/3) σε
};

std::string to_string(Family f);
Family parse_family(const std::string& name);

struct Generator {
  Family family = Family::Bump;
  double sigma = 1.0;  // noise multiplier; the scaled families use 1
  double a = 0.0;      // signal strength of the scaled families
  std::size_t n = 50;

  double regression(double x) const;
  double noise_scale(double x) const;
  double response(double x, double eps) const { return regression(x) + noise_scale(x) * eps; }
};

/// Draws X from stream 0 and ε from stream 1 of the seed.
Dataset generate(const Generator& gen, std::uint64_t seed);

/// Competing coefficients of determination computed from one fit.
struct RsqSuite {
  std::optional<double> r2_anova;      // SSR(h)/SST, integrated SST
  std::optional<double> r2_anova_adj;  // uses tr(H*)
  std::optional<double> r2_rho;        // squared correlation of m̂(X_i) with Y_i
  std::optional<double> r2_s;          // 1 - Σ(Y_i - m̂(X_i))² / Σ(Y_i - Ȳ)²
  std::optional<double> r2_linear;     // simple linear regression
  double trace = 0.0;
  std::size_t skipped_points = 0;
  /// Design points where the degree-p fit was singular and a lower degree was used.
  std::size_t design_fallbacks = 0;
};

RsqSuite rsq_suite(const Dataset& data, const FitConfig& config);

struct StudyResult {
  std::string name;
  std::vector<double> values;          // one per contributing replicate
  std::vector<std::size_t> replicate;  // replicate index of each value
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  std::uint64_t base_seed = 0;
};

/// Summary statistics (type-7 quantiles) of `values`, in the given order.
StudyResult summarize(std::string name, std::vector<double> values,
                      std::vector<std::size_t> replicate, std::uint64_t base_seed);

struct RsqStudy {
  std::vector<StudyResult> estimators;  // r2_anova, r2_anova_adj, r2_rho, r2_s, r2_linear
  std::size_t reps = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  std::size_t design_fallbacks = 0;
  std::uint64_t base_seed = 0;

  const StudyResult& estimator(const std::string& name) const;
};

/// Fraction of failed replicates above which a study aborts.
inline constexpr double kMaxFailureFraction = 0.01;

RsqStudy rsq_study(const Generator& gen, const FitConfig& config, std::size_t reps,
                   std::uint64_t seed, std::size_t threads = 1);

struct PowerRow {
  double a = 0.0;
  std::size_t n = 0;
  double h = 0.0;
  double reject_rate = 0.0;
  double mc_se = 0.0;
  std::size_t reps_used = 0;
  std::size_t failures = 0;
};

struct PowerStudySpec {
  Family family = Family::BumpScaled;
  std::vector<double> a_values;
  std::vector<std::size_t> n_values;
  std::vector<double> h_values;
  FitConfig base;  // kernel, degree, grid count; bandwidth is swept
  std::size_t reps = 400;
  double level = 0.05;
  FVariant variant = FVariant::Conservative;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

/// Rejection rates of the F-test over (a, n, h). Replicate r of sample size
/// n uses the same X and ε draws for every a and h.
std::vector<PowerRow> power_study(const PowerStudySpec& spec);

}  // namespace lpanova
