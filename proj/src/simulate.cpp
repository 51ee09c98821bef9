#include "lpanova/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lpanova/errors.hpp"
#include "lpanova/global_anova.hpp"
#include "lpanova/parallel.hpp"

namespace lpanova {

std::uint64_t mix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t index) {
  return mix64(mix64(base_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw InputError("normal_quantile: p must lie in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -x : x;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + 0x2545f4914f6cdd1dULL))) {}

double CounterRng::uniform() {
  const std::uint64_t bits = mix64(key_ + mix64(counter_++)) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::string to_string(Family f) {
  switch (f) {
    case Family::Bump: return "bump";
    case Family::TwistedPear: return "twisted_pear";
    case Family::BumpScaled: return "bump_scaled";
    case Family::PearScaled: return "pear_scaled";
  }
  return "bump";
}

Family parse_family(const std::string& name) {
  for (Family f : {Family::Bump, Family::TwistedPear, Family::BumpScaled, Family::PearScaled}) {
    if (name == to_string(f)) return f;
  }
  throw InputError("unknown family '" + name +
                   "' (expected bump, twisted_pear, bump_scaled or pear_scaled)");
}

double Generator::regression(double x) const {
  const double bump = x - std::exp(-100.0 * (x - 0.5) * (x - 0.5));
  const double pear = x * std::exp(5.0 - 0.5 * x);
  switch (family) {
    case Family::Bump: return 2.0 - 5.0 * bump;
    case Family::TwistedPear: return 5.0 + 0.1 * pear;
    case Family::BumpScaled: return 2.0 - a * bump;
    case Family::PearScaled: return 5.0 + a * pear;
  }
  return 0.0;
}

double Generator::noise_scale(double x) const {
  switch (family) {
    case Family::Bump: return sigma;
    case Family::TwistedPear: return (1.0 + 0.5 * x) / 3.0 * sigma;
    case Family::BumpScaled: return 1.0;
    case Family::PearScaled: return (1.0 + 0.5 * x) / 3.0;
  }
  return 1.0;
}

Dataset generate(const Generator& gen, std::uint64_t seed) {
  if (gen.n < 2) throw InputError("generator sample size must be at least 2");
  CounterRng xs(seed, 0);
  CounterRng es(seed, 1);
  const bool uniform_x = gen.family == Family::Bump || gen.family == Family::BumpScaled;
  std::vector<double> x(gen.n);
  std::vector<double> y(gen.n);
  for (std::size_t i = 0; i < gen.n; ++i) {
    x[i] = uniform_x ? xs.uniform() : 1.2 + xs.normal() / 3.0;
    y[i] = gen.response(x[i], es.normal());
  }
  return Dataset::make(std::move(x), std::move(y));
}

namespace {

// Local fit at a design point, lowering the degree while the window is singular.
double fitted_at_design_point(const Dataset& data, double xi, FitConfig config, bool& fell_back) {
  fell_back = false;
  for (;;) {
    try {
      return local_fit(data, xi, config).beta[0];
    } catch (const SingularDesign&) {
      if (config.degree == 0) throw;
      --config.degree;
      fell_back = true;
    }
  }
}

std::optional<double> squared_correlation(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double scale = std::max(1.0, ma * ma) * 1e-24 * static_cast<double>(n);
  if (saa <= scale || sbb <= std::max(1.0, mb * mb) * 1e-24 * static_cast<double>(n)) {
    return std::nullopt;
  }
  return std::min(1.0, sab * sab / (saa * sbb));
}

}  // namespace

RsqSuite rsq_suite(const Dataset& data, const FitConfig& config) {
  config.validate();
  data.validate();
  RsqSuite out;
  try {
    const GlobalAnova g = global_anova(data, config, true);
    out.r2_anova = g.r2;
    out.r2_anova_adj = g.r2_adjusted;
    out.trace = g.trace.value_or(0.0);
    out.skipped_points = g.skipped_points;
  } catch (const AllPointsInfeasible&) {
  }

  const std::size_t n = data.size();
  std::vector<double> mhat(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool fell_back = false;
    mhat[i] = fitted_at_design_point(data, data.x[i], config, fell_back);
    if (fell_back) ++out.design_fallbacks;
  }
  out.r2_rho = squared_correlation(mhat, data.y);
  out.r2_linear = squared_correlation(data.x, data.y);

  const double ybar = data.mean_y();
  double rss = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rss += (data.y[i] - mhat[i]) * (data.y[i] - mhat[i]);
    sst += (data.y[i] - ybar) * (data.y[i] - ybar);
  }
  if (sst > std::max(1.0, ybar * ybar) * 1e-24 * static_cast<double>(n)) out.r2_s = 1.0 - rss / sst;
  return out;
}

StudyResult summarize(std::string name, std::vector<double> values,
                      std::vector<std::size_t> replicate, std::uint64_t base_seed) {
  StudyResult s;
  s.name = std::move(name);
  s.base_seed = base_seed;
  s.count = values.size();
  if (!values.empty()) {
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.count);
    if (s.count > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double prob) {
      const double pos = prob * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
      return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    s.min = sorted.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = sorted.back();
  }
  s.values = std::move(values);
  s.replicate = std::move(replicate);
  return s;
}

const StudyResult& RsqStudy::estimator(const std::string& name) const {
  for (const auto& e : estimators) {
    if (e.name == name) return e;
  }
  throw InputError("no estimator named '" + name + "'");
}

RsqStudy rsq_study(const Generator& gen, const FitConfig& config, std::size_t reps,
                   std::uint64_t seed, std::size_t threads) {
  if (reps < 1) throw InputError("reps must be at least 1");
  config.validate();
  std::vector<std::optional<RsqSuite>> suites(reps);
  std::vector<std::string> errors(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    try {
      suites[r] = rsq_suite(generate(gen, replicate_seed(seed, r)), config);
    } catch (const NumericalError& e) {
      errors[r] = e.what();
    }
  });

  RsqStudy out;
  out.reps = reps;
  out.base_seed = seed;
  for (std::size_t r = 0; r < reps; ++r) {
    if (!suites[r]) {
      ++out.failures;
      out.failure_messages.push_back("replicate " + std::to_string(r) + ": " + errors[r]);
    } else {
      out.design_fallbacks += suites[r]->design_fallbacks;
    }
  }
  if (static_cast<double>(out.failures) > kMaxFailureFraction * static_cast<double>(reps)) {
    std::ostringstream msg;
    msg << out.failures << " of " << reps << " replicates failed";
    if (!out.failure_messages.empty()) msg << "; first: " << out.failure_messages.front();
    throw NumericalError(msg.str());
  }

  using Field = std::optional<double> RsqSuite::*;
  const std::pair<const char*, Field> fields[] = {
      {"r2_anova", &RsqSuite::r2_anova}, {"r2_anova_adj", &RsqSuite::r2_anova_adj},
      {"r2_rho", &RsqSuite::r2_rho},     {"r2_s", &RsqSuite::r2_s},
      {"r2_linear", &RsqSuite::r2_linear},
  };
  for (const auto& [name, field] : fields) {
    std::vector<double> values;
    std::vector<std::size_t> index;
    for (std::size_t r = 0; r < reps; ++r) {
      if (suites[r] && ((*suites[r]).*field)) {
        values.push_back(*((*suites[r]).*field));
        index.push_back(r);
      }
    }
    out.estimators.push_back(summarize(name, std::move(values), std::move(index), seed));
  }
  return out;
}

std::vector<PowerRow> power_study(const PowerStudySpec& spec) {
  if (spec.reps < 1) throw InputError("reps must be at least 1");
  if (spec.a_values.empty() || spec.n_values.empty() || spec.h_values.empty()) {
    throw InputError("power study needs at least one value of a, n and h");
  }
  if (!(spec.level > 0.0 && spec.level < 1.0)) throw InputError("level must lie in (0, 1)");
  for (double h : spec.h_values) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InputError("bandwidths must be positive and finite");
  }
  const std::size_t na = spec.a_values.size();
  const std::size_t nh = spec.h_values.size();
  std::vector<PowerRow> rows;
  for (std::size_t n : spec.n_values) {
    // outcome[(r * na + ia) * nh + ih]: 1 reject, 0 accept, -1 failed
    std::vector<signed char> outcome(spec.reps * na * nh, -1);
    const std::uint64_t n_seed = replicate_seed(spec.seed, n);
    parallel_for(spec.reps, spec.threads, [&](std::size_t r) {
      const std::uint64_t seed = replicate_seed(n_seed, r);
      for (std::size_t ia = 0; ia < na; ++ia) {
        Generator gen{spec.family, 1.0, spec.a_values[ia], n};
        const Dataset data = generate(gen, seed);
        for (std::size_t ih = 0; ih < nh; ++ih) {
          FitConfig config = spec.base;
          config.bandwidth = spec.h_values[ih];
          try {
            const GlobalAnova g = global_anova(data, config, true);
            const FTestResult t = f_test(g, *g.trace, spec.variant);
            outcome[(r * na + ia) * nh + ih] = t.p_value < spec.level ? 1 : 0;
          } catch (const NumericalError&) {
          }
        }
      }
    });
    for (std::size_t ia = 0; ia < na; ++ia) {
      for (std::size_t ih = 0; ih < nh; ++ih) {
        PowerRow row;
        row.a = spec.a_values[ia];
        row.n = n;
        row.h = spec.h_values[ih];
        std::size_t rejects = 0;
        for (std::size_t r = 0; r < spec.reps; ++r) {
          const signed char o = outcome[(r * na + ia) * nh + ih];
          if (o < 0) {
            ++row.failures;
          } else {
            ++row.reps_used;
            rejects += static_cast<std::size_t>(o);
          }
        }
        if (row.reps_used > 0) {
          const double m = static_cast<double>(row.reps_used);
          row.reject_rate = static_cast<double>(rejects) / m;
          row.mc_se = std::sqrt(row.reject_rate * (1.0 - row.reject_rate) / m);
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace lpanova
