#include "lpanova/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lpanova/errors.hpp"
#include "lpanova/global_anova.hpp"
#include "lpanova/inference.hpp"
#include "lpanova/io.hpp"
#include "lpanova/local_anova.hpp"
#include "lpanova/simulate.hpp"
#include "lpanova/vcm.hpp"

namespace lpanova::cli {

namespace {

std::string env_name(const std::string& flag) {
  std::string out = "LPANOVA_";
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

const char* to_string(GridMode m) { return m == GridMode::Padded ? "padded" : "data-range"; }

const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Text: return "text";
    case OutputFormat::Json: return "json";
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Default: break;
  }
  return "default";
}

nlohmann::json resolved(const CliConfig& c) {
  nlohmann::json j = {{"command", c.command},        {"input", c.input},
                      {"header", c.header},          {"kernel", c.kernel},
                      {"h", c.h},                    {"p", c.p},
                      {"grid_count", c.grid_count},  {"grid_mode", to_string(c.grid_mode)},
                      {"sst", c.sst},                {"f_variant", c.f_variant},
                      {"format", to_string(c.format)}, {"reps", c.reps}};
  if (c.grid_start) j["grid_start"] = *c.grid_start;
  if (c.grid_stop) j["grid_stop"] = *c.grid_stop;
  if (c.grid_step) j["grid_step"] = *c.grid_step;
  if (c.command == "simulate") {
    j["study"] = c.study;
    j["family"] = c.family;
    j["sigma"] = c.sigma;
    j["a"] = c.a_values;
    j["n"] = c.n_values;
    j["h_values"] = c.h_values;
    j["level"] = c.level;
  }
  if (c.command == "hstar") {
    j["policy"] = c.policy;
    j["matrix_format"] = c.matrix_format;
  }
  return j;
}

Provenance provenance(const CliConfig& c, bool seeded) {
  Provenance p;
  p.config = resolved(c);
  if (seeded) p.seed = c.seed;
  return p;
}

SstConvention parse_sst(const std::string& s) {
  if (s == "integrated") return SstConvention::Integrated;
  if (s == "sample") return SstConvention::Sample;
  throw InputError("--sst: expected integrated or sample, got '" + s + "'");
}

FitConfig fit_config(const CliConfig& c, double lo, double hi) {
  if (!(c.h > 0.0) || !std::isfinite(c.h)) throw InputError("--h: bandwidth must be a positive number");
  if (c.p < 0) throw InputError("--p: degree must be >= 0");
  FitConfig f;
  f.degree = c.p;
  f.bandwidth = c.h;
  f.kernel = Kernel::parse(c.kernel);
  f.grid_count = c.grid_count;
  const int explicit_parts = (c.grid_start ? 1 : 0) + (c.grid_stop ? 1 : 0) + (c.grid_step ? 1 : 0);
  if (explicit_parts == 3) {
    if (!(*c.grid_step > 0.0)) throw InputError("--grid-step: must be > 0");
    f.grid = GridSpec::from_step(*c.grid_start, *c.grid_stop, *c.grid_step);
  } else if (explicit_parts != 0) {
    throw InputError("--grid-start, --grid-stop and --grid-step must be given together");
  } else if (c.grid_mode == GridMode::Padded) {
    f.grid = GridSpec::padded(lo, hi, f.kernel.radius() * c.h, c.grid_count);
  } else {
    f.grid = GridSpec{lo, hi, c.grid_count};
  }
  f.grid->validate();
  f.validate();
  return f;
}

FitConfig fit_config(const CliConfig& c, const Dataset& data) {
  return fit_config(c, data.min_x(), data.max_x());
}

Dataset input_dataset(const CliConfig& c) {
  if (c.input.empty()) throw InputError("--input: a data file is required");
  return load_csv(c.input, c.header);
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InputError("--output: cannot write '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

void emit_json(std::ostream& out, nlohmann::json body, const Provenance& prov) {
  body["provenance"] = prov.to_json();
  out << body.dump(2) << '\n';
}

void cmd_fit(const CliConfig& c, std::ostream& out) {
  const Dataset data = input_dataset(c);
  const FitConfig f = fit_config(c, data);
  const Curve fits = curve(data, f);
  const Provenance prov = provenance(c, false);
  if (c.format == OutputFormat::Json) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : fits.points) {
      if (p.fit) {
        pts.push_back({{"x0", p.x0}, {"beta", p.fit->beta}, {"fhat", p.fit->fhat}});
      } else {
        pts.push_back({{"x0", p.x0}, {"failure", p.failure ? p.failure->message : ""}});
      }
    }
    emit_json(out, {{"points", pts}, {"failures", fits.failure_count()}}, prov);
    return;
  }
  prov.write_comment(out);
  write_curve_csv(out, fits, f.degree);
}

void cmd_local_anova(const CliConfig& c, std::ostream& out) {
  const Dataset data = input_dataset(c);
  const FitConfig f = fit_config(c, data);
  const AnovaCurve ac = local_anova_curve(data, f);
  const Provenance prov = provenance(c, false);
  if (c.format == OutputFormat::Json) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t g = 0; g < ac.points.size(); ++g) {
      const auto& p = ac.points[g];
      if (!p) {
        pts.push_back({{"x0", ac.grid.at(g)}, {"feasible", false}});
        continue;
      }
      pts.push_back({{"x0", p->x0}, {"sst", p->sst}, {"sse", p->sse}, {"ssr", p->ssr},
                     {"r2", p->r2 ? nlohmann::json(*p->r2) : nlohmann::json(nullptr)},
                     {"fhat", p->fhat}});
    }
    emit_json(out, {{"points", pts}, {"failures", ac.failures.size()}}, prov);
    return;
  }
  prov.write_comment(out);
  write_local_anova_csv(out, ac);
}

void cmd_anova(const CliConfig& c, std::ostream& out, bool ftest_only) {
  const Dataset data = input_dataset(c);
  const FitConfig f = fit_config(c, data);
  const SstConvention sst = parse_sst(c.sst);
  const FVariant variant = parse_f_variant(c.f_variant);
  const GlobalAnova g = global_anova(data, f, true);
  const Provenance prov = provenance(c, false);
  if (ftest_only) {
    emit_json(out, to_json(f_test(g, *g.trace, variant)), prov);
    return;
  }
  const AnovaTable table = anova_table(g, *g.trace, variant, f);
  const auto r2_adj = g.r2_adjusted_for(sst);
  switch (c.format) {
    case OutputFormat::Json: {
      nlohmann::json body = to_json(table);
      body["global"] = to_json(g);
      body["sst_convention"] = c.sst;
      body["r2"] = g.r2_for(sst);
      body["r2_adjusted"] = r2_adj ? nlohmann::json(*r2_adj) : nlohmann::json(nullptr);
      emit_json(out, body, prov);
      return;
    }
    case OutputFormat::Csv:
      prov.write_comment(out);
      write_anova_csv(out, table);
      return;
    default:
      prov.write_comment(out);
      write_anova_text(out, table);
      out << "R2 (" << c.sst << " SST) = " << format_number(g.r2_for(sst));
      if (r2_adj) out << ", adjusted = " << format_number(*r2_adj);
      out << '\n';
  }
}

void cmd_vcm(const CliConfig& c, std::ostream& out) {
  if (c.input.empty()) throw InputError("--input: a data file is required");
  const VcmDataset data = load_vcm_csv(c.input, c.header);
  const auto [lo, hi] = std::minmax_element(data.u.begin(), data.u.end());
  const FitConfig f = fit_config(c, *lo, *hi);
  const VcmGlobalAnova va = vcm_global(data, f, {});
  const SstConvention sst = parse_sst(c.sst);
  const Provenance prov = provenance(c, false);
  const GridSpec& grid = *f.grid;
  if (c.format == OutputFormat::Csv) {
    prov.write_comment(out);
    out << "u0";
    for (std::size_t k = 0; k < data.d(); ++k) out << ",a" << k;
    out << ",ghat\n";
    for (std::size_t g = 0; g < grid.count; ++g) {
      out << format_number(grid.at(g));
      try {
        const VcmFit fit = vcm_local_fit(data, grid.at(g), f);
        for (Eigen::Index k = 0; k < fit.a_hat.size(); ++k) out << ',' << format_number(fit.a_hat(k));
        out << ',' << format_number(fit.ghat) << '\n';
      } catch (const NumericalError&) {
        for (std::size_t k = 0; k <= data.d(); ++k) out << ',';
        out << '\n';
      }
    }
    return;
  }
  nlohmann::json fits = nlohmann::json::array();
  for (std::size_t g = 0; g < grid.count; ++g) {
    try {
      const VcmFit fit = vcm_local_fit(data, grid.at(g), f);
      std::vector<double> a(fit.a_hat.data(), fit.a_hat.data() + fit.a_hat.size());
      fits.push_back({{"u0", fit.u0}, {"a", a}, {"ghat", fit.ghat}});
    } catch (const NumericalError& e) {
      fits.push_back({{"u0", grid.at(g)}, {"failure", e.what()}});
    }
  }
  nlohmann::json body = {{"global", to_json(va.global)},
                         {"d", va.d},
                         {"sst_convention", c.sst},
                         {"r2", va.global.r2_for(sst)},
                         {"failures", va.failures.size()},
                         {"fits", fits}};
  emit_json(out, body, prov);
}

void cmd_simulate(const CliConfig& c, std::ostream& out) {
  const Family family = parse_family(c.family);
  if (c.reps < 1) throw InputError("--reps: must be at least 1");
  for (std::size_t n : c.n_values) {
    if (n < 2) throw InputError("--n: sample sizes must be at least 2");
  }
  if (c.a_values.empty() || c.n_values.empty()) throw InputError("--a/--n: need at least one value");
  const Provenance prov = provenance(c, true);
  FitConfig base;
  base.degree = c.p;
  base.kernel = Kernel::parse(c.kernel);
  base.grid_count = c.grid_count;

  if (!c.write_dataset.empty()) {
    const Generator gen{family, c.sigma, c.a_values.front(), c.n_values.front()};
    std::ofstream file(c.write_dataset);
    if (!file) throw InputError("--write-dataset: cannot write '" + c.write_dataset + "'");
    write_dataset_csv(file, generate(gen, replicate_seed(c.seed, 0)), &prov);
  }

  if (c.study == "rsq") {
    if (!(c.h > 0.0)) throw InputError("--h: bandwidth must be a positive number");
    base.bandwidth = c.h;
    const Generator gen{family, c.sigma, c.a_values.front(), c.n_values.front()};
    const RsqStudy study = rsq_study(gen, base, c.reps, c.seed, c.threads);
    if (c.format == OutputFormat::Csv) {
      prov.write_comment(out);
      write_rsq_replicates_csv(out, study);
      return;
    }
    nlohmann::json est = nlohmann::json::object();
    for (const auto& e : study.estimators) est[e.name] = to_json(e);
    emit_json(out,
              {{"estimators", est},
               {"reps", study.reps},
               {"failures", study.failures},
               {"failure_messages", study.failure_messages},
               {"design_fallbacks", study.design_fallbacks}},
              prov);
    return;
  }
  if (c.study != "power") throw InputError("--study: expected rsq or power, got '" + c.study + "'");
  PowerStudySpec spec;
  spec.family = family;
  spec.a_values = c.a_values;
  spec.n_values = c.n_values;
  spec.h_values = c.h_values.empty() ? std::vector<double>{c.h} : c.h_values;
  spec.base = base;
  spec.base.bandwidth = spec.h_values.front();
  spec.reps = c.reps;
  spec.level = c.level;
  spec.variant = parse_f_variant(c.f_variant);
  spec.seed = c.seed;
  spec.threads = c.threads;
  const auto rows = power_study(spec);
  if (c.format == OutputFormat::Json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      arr.push_back({{"a", r.a}, {"n", r.n}, {"h", r.h}, {"reject_rate", r.reject_rate},
                     {"mc_se", r.mc_se}, {"reps_used", r.reps_used}, {"failures", r.failures}});
    }
    emit_json(out, {{"rows", arr}}, prov);
    return;
  }
  prov.write_comment(out);
  write_power_csv(out, rows);
}

void cmd_hstar(const CliConfig& c, std::ostream& out) {
  const Dataset data = input_dataset(c);
  const FitConfig f = fit_config(c, data);
  HStarOptions opt;
  if (c.policy == "fail") {
    opt.policy = InfeasiblePolicy::Fail;
  } else if (c.policy == "skip") {
    opt.policy = InfeasiblePolicy::Skip;
  } else {
    throw InputError("--policy: expected fail or skip, got '" + c.policy + "'");
  }
  opt.max_n = c.max_n;
  if (c.matrix_format != "csv" && c.matrix_format != "binary") {
    throw InputError("--matrix-format: expected csv or binary, got '" + c.matrix_format + "'");
  }
  const HStar hs = hstar(data, f, opt);
  const HStarDiagnostics diag = diagnose(hs, data, f, data.size() <= 2000);
  const GlobalAnova g = global_anova(data, f, false);
  const QuadraticFormReport qf = quadratic_form_check(hs, data.y, g);
  const Provenance prov = provenance(c, false);
  if (!c.matrix_output.empty()) {
    if (c.matrix_format == "binary") {
      std::ofstream file(c.matrix_output, std::ios::binary);
      if (!file) throw InputError("--matrix-output: cannot write '" + c.matrix_output + "'");
      write_hstar_binary(file, hs, f);
    } else {
      std::ofstream file(c.matrix_output);
      if (!file) throw InputError("--matrix-output: cannot write '" + c.matrix_output + "'");
      prov.write_comment(file);
      write_hstar_csv(file, hs, f);
    }
  }
  emit_json(out,
            {{"n", hs.n()},
             {"trace", hs.trace},
             {"skipped", hs.skipped},
             {"diagnostics", to_json(diag)},
             {"quadratic_form", to_json(qf)}},
            prov);
}

}  // namespace

std::optional<int> parse(int argc, const char* const* argv, CliConfig& c, std::ostream& out,
                         std::ostream& err) {
  CLI::App app{"ANOVA inference for local polynomial regression"};
  app.set_help_flag("--help", "print this help message and exit");
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "flat key = value configuration file");
  app.require_subcommand(1, 1);
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit", "local polynomial fits over the grid (CSV: x0, beta..., fhat)"},
      {"local-anova", "pointwise SST/SSE/SSR and R² over the grid"},
      {"anova", "global ANOVA table"},
      {"ftest", "F-test for no effect (JSON)"},
      {"vcm", "varying coefficient model fit and global ANOVA"},
      {"simulate", "Monte Carlo R² and power studies"},
      {"hstar", "assemble H*, export it and report diagnostics"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  const std::map<std::string, GridMode> grid_modes{{"data-range", GridMode::DataRange},
                                                   {"padded", GridMode::Padded}};
  const std::map<std::string, OutputFormat> formats{
      {"text", OutputFormat::Text}, {"json", OutputFormat::Json}, {"csv", OutputFormat::Csv}};

  app.add_option("--input", c.input, "CSV data file")->group("Data");
  app.add_flag("--header", c.header, "first non-comment row is a header")->group("Data");
  app.add_option("--kernel", c.kernel, "epanechnikov, gaussian or uniform")
      ->check(CLI::IsMember({"epanechnikov", "gaussian", "uniform"}))->group("Fit");
  app.add_option("--h", c.h, "bandwidth")->check(CLI::PositiveNumber)->group("Fit");
  app.add_option("--p", c.p, "local polynomial degree")->check(CLI::Range(0, 10))->group("Fit");
  app.add_option("--grid-count", c.grid_count, "grid points")->check(CLI::Range(2, 10000000))->group("Grid");
  app.add_option("--grid-start", c.grid_start, "explicit grid start")->group("Grid");
  app.add_option("--grid-stop", c.grid_stop, "explicit grid stop")->group("Grid");
  app.add_option("--grid-step", c.grid_step, "explicit grid step")->check(CLI::PositiveNumber)->group("Grid");
  app.add_option("--grid-mode", c.grid_mode, "data-range or padded (extended by the kernel radius)")
      ->transform(CLI::CheckedTransformer(grid_modes))->group("Grid");
  app.add_option("--sst", c.sst, "R² denominator: integrated or sample")
      ->check(CLI::IsMember({"integrated", "sample"}))->group("ANOVA");
  app.add_option("--f-variant", c.f_variant, "standard or conservative")
      ->check(CLI::IsMember({"standard", "conservative"}))->group("ANOVA");
  app.add_option("--format", c.format, "text, json or csv")
      ->transform(CLI::CheckedTransformer(formats))->group("Output");
  app.add_option("--output", c.output, "write results here instead of standard output")->group("Output");
  app.add_option("--seed", c.seed, "base seed")->group("Simulation");
  app.add_option("--reps", c.reps, "Monte Carlo replicates")->check(CLI::PositiveNumber)->group("Simulation");
  app.add_option("--threads", c.threads, "worker threads, 0 for all cores")->group("Simulation");
  app.add_option("--study", c.study, "rsq or power")->check(CLI::IsMember({"rsq", "power"}))->group("Simulation");
  app.add_option("--family", c.family, "bump, twisted_pear, bump_scaled or pear_scaled")
      ->check(CLI::IsMember({"bump", "twisted_pear", "bump_scaled", "pear_scaled"}))->group("Simulation");
  app.add_option("--sigma", c.sigma, "noise multiplier")->check(CLI::NonNegativeNumber)->group("Simulation");
  app.add_option("--a", c.a_values, "signal strength(s) of the scaled families")
      ->delimiter(',')->group("Simulation");
  app.add_option("--n", c.n_values, "sample size(s)")->delimiter(',')->group("Simulation");
  app.add_option("--h-values", c.h_values, "bandwidths swept by the power study")
      ->delimiter(',')->check(CLI::PositiveNumber)->group("Simulation");
  app.add_option("--level", c.level, "test level")->check(CLI::Range(0.0, 1.0))->group("Simulation");
  app.add_option("--write-dataset", c.write_dataset, "also write replicate 0's data to this CSV")
      ->group("Simulation");
  app.add_option("--matrix-output", c.matrix_output, "H* export path")->group("H*");
  app.add_option("--matrix-format", c.matrix_format, "csv or binary")
      ->check(CLI::IsMember({"csv", "binary"}))->group("H*");
  app.add_option("--policy", c.policy, "infeasible grid points: fail or skip")
      ->check(CLI::IsMember({"fail", "skip"}))->group("H*");
  app.add_option("--max-n", c.max_n, "largest n for dense H*")->group("H*");

  for (CLI::Option* opt : app.get_options()) {
    const std::string flag = opt->get_single_name();
    if (flag.empty() || flag == "help" || flag == "version" || flag == "config") continue;
    opt->envname(env_name(flag));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }
  c.command = app.get_subcommands().front()->get_name();
  return std::nullopt;
}

int run(const CliConfig& c, std::ostream& out, std::ostream& err) {
  try {
    Sink sink(c.output, out);
    std::ostream& o = sink.stream();
    if (c.command == "fit") {
      cmd_fit(c, o);
    } else if (c.command == "local-anova") {
      cmd_local_anova(c, o);
    } else if (c.command == "anova") {
      cmd_anova(c, o, false);
    } else if (c.command == "ftest") {
      cmd_anova(c, o, true);
    } else if (c.command == "vcm") {
      cmd_vcm(c, o);
    } else if (c.command == "simulate") {
      cmd_simulate(c, o);
    } else if (c.command == "hstar") {
      cmd_hstar(c, o);
    } else {
      throw InputError("unknown command '" + c.command + "'");
    }
    o.flush();
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int main(int argc, const char* const* argv) {
  CliConfig config;
  if (auto code = parse(argc, argv, config, std::cout, std::cerr)) return *code;
  return run(config, std::cout, std::cerr);
}

}  // namespace lpanova::cli
