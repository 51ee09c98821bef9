#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "lpanova/cli.hpp"
#include "lpanova/errors.hpp"
#include "lpanova/io.hpp"

using namespace lpanova;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text, bool header = false) {
  std::istringstream in(text);
  try {
    parse_dataset(in, header, "data.csv");
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lpanova_unit";
  fs::create_directories(dir);
  return dir / name;
}

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lpanova");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  cli::CliConfig config;
  CliRun r;
  if (auto code = cli::parse(static_cast<int>(argv.size()), argv.data(), config, out, err)) {
    r.code = *code;
  } else {
    r.code = cli::run(config, out, err);
  }
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json json_of(const std::string& text) { return nlohmann::json::parse(text); }

std::string write_sample(const std::string& name, std::size_t n, std::uint64_t seed, double a) {
  const fs::path p = scratch(name);
  std::ofstream f(p);
  write_dataset_csv(f, generate(Generator{Family::BumpScaled, 1.0, a, n}, seed));
  return p.string();
}

}  // namespace

TEST_CASE("two-column CSV parsing") {
  std::istringstream in("0,0\n1,1\n2,2");
  const Dataset d = parse_dataset(in, false);
  CHECK(d.size() == 3);
  CHECK(d.y[2] == 2.0);
  std::istringstream with_header("x,y\n# note\n\n 0.5 , 1e-3\n1,2\n");
  const Dataset h = parse_dataset(with_header, true);
  CHECK(h.size() == 2);
  CHECK(h.y[0] == 1e-3);
}

TEST_CASE("CSV errors carry line numbers") {
  CHECK(error_of("0,1\n1,2\n2,3\n3,4\n4,5\n5,6\n6,NaN\n").find("data.csv:7:") != std::string::npos);
  CHECK(error_of("0,1\n1,2\n2,3\n3,4\n4,5\n5,6\n6,NaN\n").find("non-finite") != std::string::npos);
  CHECK(error_of("0,1\n1,abc\n").find("data.csv:2: malformed") != std::string::npos);
  CHECK(error_of("0,1\n1,2,3\n").find("data.csv:2: expected 2 columns") != std::string::npos);
  CHECK(error_of("0,1,2\n1,2,3\n").find("expected 2 columns") != std::string::npos);
  CHECK(error_of("0,1\n1,\n").find("data.csv:2: empty") != std::string::npos);
  CHECK(error_of("0,inf\n1,2\n").find("non-finite") != std::string::npos);
  CHECK(error_of("x,y\n", true).find("no data rows") != std::string::npos);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", false), InputError);
}

TEST_CASE("VCM CSV parsing injects the intercept") {
  std::istringstream in("u,x2,x3,y\n0.1,2,3,4\n0.2,5,6,7\n0.3,1,1,1\n");
  const VcmDataset v = parse_vcm_dataset(in, true);
  CHECK(v.size() == 3);
  CHECK(v.d() == 3);
  CHECK(v.x(1, 0) == 1.0);
  CHECK(v.x(1, 1) == 5.0);
  CHECK(v.x(1, 2) == 6.0);
  CHECK(v.y[1] == 7.0);
  std::istringstream two("0.1,4\n0.2,7\n");
  CHECK(parse_vcm_dataset(two, false).d() == 1);
}

TEST_CASE("numbers round-trip through 17 significant digits") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> e(-300.0, 300.0);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::pow(10.0, e(rng)) * (i % 2 ? -1.0 : 1.0);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("written datasets reload to identical analyses") {
  const Dataset d = generate(Generator{Family::Bump, 0.5, 0.0, 60}, 4);
  Provenance prov;
  prov.config = {{"family", "bump"}};
  prov.seed = 4;
  std::stringstream buf;
  write_dataset_csv(buf, d, &prov);
  const Dataset back = parse_dataset(buf, true);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  FitConfig c;
  c.bandwidth = 0.22;
  const GlobalAnova a = global_anova(d, c);
  const GlobalAnova b = global_anova(back, c);
  CHECK(a.sse == b.sse);
  CHECK(a.ssr == b.ssr);
  CHECK(*a.trace == *b.trace);
}

TEST_CASE("provenance header") {
  Provenance p;
  p.config = {{"h", 0.5}};
  p.seed = 12;
  std::ostringstream out;
  p.write_comment(out);
  CHECK(out.str().find(std::string("# lpanova ") + kVersion) == 0);
  CHECK(out.str().find("# config {\"h\":0.5}") != std::string::npos);
  CHECK(out.str().find("# seed 12") != std::string::npos);
  const nlohmann::json j = p.to_json();
  CHECK(j["version"] == kVersion);
  CHECK(j["seed"] == 12);
}

TEST_CASE("ANOVA table serializations") {
  const Dataset d = generate(Generator{Family::Bump, 0.5, 0.0, 50}, 2);
  FitConfig c;
  c.bandwidth = 0.22;
  const GlobalAnova g = global_anova(d, c);
  const AnovaTable t = anova_table(g, *g.trace, FVariant::Conservative, c);
  const nlohmann::json j = to_json(t);
  REQUIRE(j["rows"].size() == 3);
  for (const char* key : {"source", "df", "ss_raw", "ss_per_n", "ms", "f", "p_value"}) {
    CHECK(j["rows"][0].contains(key));
  }
  CHECK(j["rows"][0]["source"] == "Regression");
  CHECK(j["rows"][2]["ms"].is_null());
  CHECK(j["rows"][0]["ss_raw"].get<double>() == t.rows[0].ss_raw);

  std::ostringstream csv;
  write_anova_csv(csv, t);
  std::istringstream lines(csv.str());
  std::string header, reg;
  std::getline(lines, header);
  std::getline(lines, reg);
  CHECK(header == "source,df,ss_raw,ss_per_n,ms,f,p_value");
  CHECK(reg.rfind("Regression,", 0) == 0);

  std::ostringstream text;
  write_anova_text(text, t);
  char expected[64];
  std::snprintf(expected, sizeof expected, "%.4f", t.rows[0].ss_raw);
  CHECK(text.str().find(expected) != std::string::npos);
  CHECK(text.str().find("Residual") != std::string::npos);
}

TEST_CASE("H* binary export round-trips") {
  const Dataset d = generate(Generator{Family::Bump, 0.5, 0.0, 40}, 3);
  FitConfig c;
  c.bandwidth = 0.3;
  c.kernel = Kernel(KernelFamily::Gaussian);
  const HStar hs = hstar(d, c);
  std::stringstream buf;
  write_hstar_binary(buf, hs, c);
  const HStarFile f = read_hstar_binary(buf);
  CHECK((f.matrix.array() == hs.matrix.array()).all());
  CHECK(f.kernel == "gaussian");
  CHECK(f.bandwidth == 0.3);
  CHECK(f.degree == 1);
  CHECK(f.grid.count == hs.grid.count);
  std::stringstream bad("NOTHSTAR");
  CHECK_THROWS_AS(read_hstar_binary(bad), InputError);

  std::stringstream csv;
  write_hstar_csv(csv, hs, c);
  const auto rows = read_numeric_rows(csv, false, "hstar.csv");
  REQUIRE(rows.size() == 40);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t k = 0; k < 40; ++k) {
      CHECK(rows[i].values[k] == hs.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    }
  }
}

TEST_CASE("study serializations") {
  const RsqStudy st = rsq_study(Generator{Family::Bump, 0.5, 0.0, 50}, [] {
    FitConfig c;
    c.bandwidth = 0.22;
    return c;
  }(), 5, 1);
  std::ostringstream out;
  write_rsq_replicates_csv(out, st);
  std::istringstream in(out.str());
  const auto rows = read_numeric_rows(in, true, "reps.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[3].values[1] == st.estimator("r2_anova").values[3]);
  const nlohmann::json j = to_json(st.estimator("r2_s"), true);
  CHECK(j["values"].size() == 5);
  std::ostringstream p;
  write_power_csv(p, {PowerRow{0.5, 50, 0.22, 0.1, 0.01, 100, 0}});
  CHECK(p.str().rfind("a,n,h,reject_rate,mc_se", 0) == 0);
}

TEST_CASE("CLI exit codes") {
  const std::string null_sample = write_sample("null.csv", 80, 5, 0.0);
  const CliRun ok = run_cli({"ftest", "--input", null_sample, "--header", "--h", "0.22"});
  REQUIRE(ok.code == 0);
  const nlohmann::json j = json_of(ok.out);
  CHECK(j["p_value"].get<double>() >= 0.0);
  CHECK(j["p_value"].get<double>() <= 1.0);
  CHECK(j["variant"] == "conservative");
  CHECK(j["provenance"]["config"]["h"] == 0.22);

  CHECK(run_cli({"ftest", "--input", "/nonexistent.csv", "--h", "0.2"}).code == 1);
  CHECK(run_cli({"ftest", "--input", null_sample, "--header"}).code == 1);
  CHECK(run_cli({"ftest", "--input", null_sample, "--header", "--h", "-2"}).code == 1);
  CHECK(run_cli({"ftest", "--input", null_sample, "--header", "--h", "0.2", "--kernel", "cosine"}).code == 1);
  CHECK(run_cli({"nosuchcommand"}).code == 1);
  const CliRun tiny = run_cli({"anova", "--input", null_sample, "--header", "--h", "0.0001"});
  CHECK(tiny.code == 2);
  CHECK(tiny.err.find("numerical failure") != std::string::npos);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("CLI grid flags, environment and config file") {
  const std::string sample = write_sample("grid.csv", 60, 6, 2.0);
  const CliRun explicit_grid = run_cli({"local-anova", "--input", sample, "--header", "--h", "0.3",
                                        "--grid-start", "0", "--grid-stop", "1", "--grid-step", "0.25"});
  REQUIRE(explicit_grid.code == 0);
  std::istringstream in(explicit_grid.out);
  CHECK(read_numeric_rows(in, true, "out").size() == 5);
  CHECK(run_cli({"fit", "--input", sample, "--header", "--h", "0.3", "--grid-start", "0"}).code == 1);

  setenv("LPANOVA_H", "0.3", 1);
  setenv("LPANOVA_F_VARIANT", "standard", 1);
  const CliRun env = run_cli({"ftest", "--input", sample, "--header"});
  unsetenv("LPANOVA_H");
  unsetenv("LPANOVA_F_VARIANT");
  REQUIRE(env.code == 0);
  CHECK(json_of(env.out)["variant"] == "standard");
  CHECK(json_of(env.out)["provenance"]["config"]["h"] == 0.3);

  const fs::path cfg = scratch("study.ini");
  std::ofstream(cfg) << "h = 0.34\ngrid-count = 50\n";
  const CliRun file = run_cli({"ftest", "--input", sample, "--header", "--config", cfg.string()});
  REQUIRE(file.code == 0);
  CHECK(json_of(file.out)["provenance"]["config"]["grid_count"] == 50);
  CHECK(json_of(file.out)["provenance"]["config"]["h"] == 0.34);
}

TEST_CASE("CLI subcommands produce their artifacts") {
  const std::string sample = write_sample("sub.csv", 60, 7, 2.0);
  const std::vector<std::string> base{"--input", sample, "--header", "--h", "0.3"};
  auto with = [&](std::string cmd, std::vector<std::string> extra) {
    std::vector<std::string> args{std::move(cmd)};
    args.insert(args.end(), base.begin(), base.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };
  const CliRun fit = with("fit", {"--grid-count", "20"});
  REQUIRE(fit.code == 0);
  CHECK(fit.out.find("x0,beta0,beta1,fhat") != std::string::npos);

  const CliRun table = with("anova", {});
  REQUIRE(table.code == 0);
  CHECK(table.out.find("Regression") != std::string::npos);
  CHECK(table.out.find("# lpanova") == 0);
  const CliRun table_json = with("anova", {"--format", "json", "--sst", "sample"});
  REQUIRE(table_json.code == 0);
  const nlohmann::json tj = json_of(table_json.out);
  CHECK(tj["r2"].get<double>() == doctest::Approx(tj["global"]["r2_sample"].get<double>()));

  const fs::path matrix = scratch("h.bin");
  const CliRun hs = with("hstar", {"--matrix-output", matrix.string(), "--matrix-format", "binary"});
  REQUIRE(hs.code == 0);
  std::ifstream mf(matrix, std::ios::binary);
  const HStarFile f = read_hstar_binary(mf);
  CHECK(f.matrix.rows() == 60);
  CHECK(json_of(hs.out)["trace"].get<double>() == doctest::Approx(f.matrix.trace()).epsilon(1e-14));

  const fs::path vcm = scratch("vcm.csv");
  {
    std::ofstream v(vcm);
    v << "u,x2,y\n";
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 80; ++i) {
      const double u = unit(rng), x2 = unit(rng) - 0.5;
      v << u << ',' << x2 << ',' << 1.0 + 2.0 * u * x2 + 0.1 * (unit(rng) - 0.5) << '\n';
    }
  }
  const CliRun vr = run_cli({"vcm", "--input", vcm.string(), "--header", "--h", "0.3", "--grid-count", "30"});
  REQUIRE(vr.code == 0);
  const nlohmann::json vj = json_of(vr.out);
  CHECK(vj["d"] == 2);
  CHECK(vj["fits"].size() == 30);
}

TEST_CASE("CLI simulate matches the library study") {
  const fs::path data = scratch("sim.csv");
  const CliRun r = run_cli({"simulate", "--family", "bump", "--sigma", "0.5", "--n", "50", "--h", "0.22",
                            "--reps", "40", "--seed", "42", "--write-dataset", data.string()});
  REQUIRE(r.code == 0);
  const nlohmann::json j = json_of(r.out);
  FitConfig c;
  c.bandwidth = 0.22;
  const RsqStudy st = rsq_study(Generator{Family::Bump, 0.5, 0.0, 50}, c, 40, 42);
  CHECK(j["estimators"]["r2_anova"]["mean"].get<double>() == st.estimator("r2_anova").mean);
  CHECK(j["estimators"]["r2_rho"]["sd"].get<double>() == st.estimator("r2_rho").sd);
  CHECK(j["provenance"]["seed"] == 42);
  const Dataset written = load_csv(data.string(), true);
  CHECK(written.size() == 50);

  const CliRun power = run_cli({"simulate", "--study", "power", "--family", "bump_scaled", "--a", "0,1",
                                "--n", "50", "--h-values", "0.22,0.34", "--reps", "20", "--seed", "3"});
  REQUIRE(power.code == 0);
  std::istringstream in(power.out);
  CHECK(read_numeric_rows(in, true, "power").size() == 4);
}
