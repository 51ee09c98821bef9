#include "lpanova/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "lpanova/errors.hpp"

namespace lpanova {

static_assert(std::endian::native == std::endian::little, "binary H* export assumes little-endian");

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

double parse_cell(const std::string& cell, const std::string& source, std::size_t line,
                  std::size_t column) {
  const std::string text = trim(cell);
  if (text.empty()) {
    throw InputError(where(source, line) + "empty value in column " + std::to_string(column));
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) {
    throw InputError(where(source, line) + "malformed value '" + text + "' in column " +
                     std::to_string(column));
  }
  if (!std::isfinite(v)) {
    throw InputError(where(source, line) + "non-finite value '" + text + "' in column " +
                     std::to_string(column));
  }
  return v;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InputError("truncated H* file");
  return v;
}

}  // namespace

std::vector<NumericRow> read_numeric_rows(std::istream& in, bool header, const std::string& source) {
  std::vector<NumericRow> rows;
  std::string line;
  std::size_t number = 0;
  bool header_pending = header;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    NumericRow row{number, {}};
    std::stringstream cells(text);
    std::string cell;
    std::size_t column = 0;
    while (std::getline(cells, cell, ',')) row.values.push_back(parse_cell(cell, source, number, ++column));
    if (text.back() == ',') {
      throw InputError(where(source, number) + "empty value in column " + std::to_string(column + 1));
    }
    if (!rows.empty() && row.values.size() != rows.front().values.size()) {
      throw InputError(where(source, number) + "expected " +
                       std::to_string(rows.front().values.size()) + " columns, found " +
                       std::to_string(row.values.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset parse_dataset(std::istream& in, bool header, const std::string& source) {
  const auto rows = read_numeric_rows(in, header, source);
  if (rows.empty()) throw InputError(source + ": no data rows");
  if (rows.front().values.size() != 2) {
    throw InputError(where(source, rows.front().line) + "expected 2 columns (x, y), found " +
                     std::to_string(rows.front().values.size()));
  }
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.values[0]);
    y.push_back(r.values[1]);
  }
  return Dataset::make(std::move(x), std::move(y));
}

Dataset load_csv(const std::string& path, bool header) {
  auto in = open(path);
  return parse_dataset(in, header, path);
}

VcmDataset parse_vcm_dataset(std::istream& in, bool header, const std::string& source) {
  const auto rows = read_numeric_rows(in, header, source);
  if (rows.empty()) throw InputError(source + ": no data rows");
  const std::size_t width = rows.front().values.size();
  if (width < 2) {
    throw InputError(where(source, rows.front().line) +
                     "expected at least 2 columns (u, [x2..xd,] y)");
  }
  const std::size_t n = rows.size();
  std::vector<double> u(n), y(n);
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width - 2));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = rows[i].values;
    u[i] = v.front();
    y[i] = v.back();
    for (std::size_t k = 1; k + 1 < width; ++k) {
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1)) = v[k];
    }
  }
  return VcmDataset::with_intercept(std::move(u), cov, std::move(y));
}

VcmDataset load_vcm_csv(const std::string& path, bool header) {
  auto in = open(path);
  return parse_vcm_dataset(in, header, path);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json Provenance::to_json() const {
  nlohmann::json j;
  j["tool"] = "lpanova";
  j["version"] = kVersion;
  j["config"] = config;
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  return j;
}

void Provenance::write_comment(std::ostream& out) const {
  out << "# lpanova " << kVersion << "\n";
  out << "# config " << config.dump() << "\n";
  out << "# seed " << (seed ? std::to_string(*seed) : std::string("none")) << "\n";
}

void write_dataset_csv(std::ostream& out, const Dataset& data, const Provenance* provenance) {
  if (provenance) provenance->write_comment(out);
  out << "x,y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_number(data.x[i]) << ',' << format_number(data.y[i]) << '\n';
  }
}

nlohmann::json to_json(const FTestResult& test) {
  return {{"variant", to_string(test.variant)},
          {"f", test.f_stat},
          {"df_model", test.df_model},
          {"df_resid", test.df_resid},
          {"p_value", test.p_value}};
}

nlohmann::json to_json(const GlobalAnova& g) {
  return {{"n", g.n},
          {"sst_integrated", g.sst_integrated},
          {"sst_sample", g.sst_sample},
          {"sse", g.sse},
          {"ssr", g.ssr},
          {"r2", g.r2},
          {"r2_sample", g.r2_sample},
          {"trace", optional_json(g.trace)},
          {"r2_adjusted", optional_json(g.r2_adjusted)},
          {"r2_adjusted_sample", optional_json(g.r2_adjusted_sample)},
          {"grid_points", g.grid_points},
          {"skipped_points", g.skipped_points}};
}

nlohmann::json to_json(const AnovaTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"source", r.source},
                    {"df", r.df},
                    {"ss_raw", r.ss_raw},
                    {"ss_per_n", r.ss_per_n},
                    {"ms", optional_json(r.ms)},
                    {"f", optional_json(r.f)},
                    {"p_value", optional_json(r.p_value)}});
  }
  return {{"rows", rows},
          {"sse_plus_ssr_raw", table.sst_integrated_raw},
          {"trace", table.trace},
          {"test", to_json(table.test)},
          {"n", table.n},
          {"bandwidth", table.bandwidth},
          {"degree", table.degree},
          {"kernel", table.kernel}};
}

nlohmann::json to_json(const StudyResult& s, bool with_values) {
  nlohmann::json j = {{"name", s.name},   {"count", s.count}, {"mean", s.mean},
                      {"sd", s.sd},       {"min", s.min},     {"q1", s.q1},
                      {"median", s.median}, {"q3", s.q3},     {"max", s.max},
                      {"base_seed", s.base_seed}};
  if (with_values) {
    j["values"] = s.values;
    j["replicate"] = s.replicate;
  }
  return j;
}

nlohmann::json to_json(const HStarDiagnostics& d) {
  return {{"max_asymmetry", d.max_asymmetry},
          {"interior_count", d.interior_count},
          {"max_interior_row_sum_error", d.max_interior_row_sum_error},
          {"max_boundary_row_sum_error", d.max_boundary_row_sum_error},
          {"centering_gap", d.centering_gap}};
}

nlohmann::json to_json(const QuadraticFormReport& r) {
  return {{"sse_quadratic", r.sse_quadratic},       {"sse_integrated", r.sse_integrated},
          {"ssr_quadratic", r.ssr_quadratic},       {"ssr_integrated", r.ssr_integrated},
          {"sse_gap_relative", r.sse_gap_relative}, {"ssr_gap_relative", r.ssr_gap_relative}};
}

void write_anova_text(std::ostream& out, const AnovaTable& table) {
  auto fixed4 = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  out << "ANOVA table for local polynomial regression\n";
  out << "kernel " << table.kernel << ", h = " << fixed4(table.bandwidth) << ", p = " << table.degree
      << ", n = " << table.n << ", tr(H*) = " << fixed4(table.trace) << "\n\n";
  out << std::left << std::setw(12) << "Source" << std::right << std::setw(12) << "df"
      << std::setw(16) << "SS (raw)" << std::setw(14) << "SS/n" << std::setw(14) << "MS"
      << std::setw(12) << "F" << std::setw(14) << "p-value" << "\n";
  for (const auto& r : table.rows) {
    out << std::left << std::setw(12) << r.source << std::right << std::setw(12) << fixed4(r.df)
        << std::setw(16) << fixed4(r.ss_raw) << std::setw(14) << fixed4(r.ss_per_n) << std::setw(14)
        << (r.ms ? fixed4(*r.ms) : "") << std::setw(12) << (r.f ? fixed4(*r.f) : "")
        << std::setw(14);
    if (r.p_value) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4g", *r.p_value);
      out << buf;
    } else {
      out << "";
    }
    out << "\n";
  }
  out << "\nSSR + SSE (raw) = " << fixed4(table.sst_integrated_raw) << "; F variant "
      << to_string(table.test.variant) << "\n";
}

void write_anova_csv(std::ostream& out, const AnovaTable& table) {
  out << "source,df,ss_raw,ss_per_n,ms,f,p_value\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& r : table.rows) {
    out << r.source << ',' << format_number(r.df) << ',' << format_number(r.ss_raw) << ','
        << format_number(r.ss_per_n) << ',' << opt(r.ms) << ',' << opt(r.f) << ',' << opt(r.p_value)
        << '\n';
  }
}

void write_curve_csv(std::ostream& out, const Curve& curve, int degree) {
  out << "x0";
  for (int j = 0; j <= degree; ++j) out << ",beta" << j;
  out << ",fhat\n";
  for (const auto& p : curve.points) {
    out << format_number(p.x0);
    for (int j = 0; j <= degree; ++j) {
      out << ',';
      if (p.fit) out << format_number(p.fit->beta[static_cast<std::size_t>(j)]);
    }
    out << ',';
    if (p.fit) out << format_number(p.fit->fhat);
    out << '\n';
  }
}

void write_local_anova_csv(std::ostream& out, const AnovaCurve& curve) {
  out << "x0,sst,sse,ssr,r2,fhat\n";
  for (std::size_t g = 0; g < curve.points.size(); ++g) {
    const auto& p = curve.points[g];
    if (!p) {
      out << format_number(curve.grid.at(g)) << ",,,,,\n";
      continue;
    }
    out << format_number(p->x0) << ',' << format_number(p->sst) << ',' << format_number(p->sse)
        << ',' << format_number(p->ssr) << ',' << (p->r2 ? format_number(*p->r2) : "") << ','
        << format_number(p->fhat) << '\n';
  }
}

void write_rsq_replicates_csv(std::ostream& out, const RsqStudy& study) {
  out << "replicate";
  for (const auto& e : study.estimators) out << ',' << e.name;
  out << '\n';
  std::vector<std::size_t> cursor(study.estimators.size(), 0);
  for (std::size_t r = 0; r < study.reps; ++r) {
    out << r;
    for (std::size_t e = 0; e < study.estimators.size(); ++e) {
      const auto& est = study.estimators[e];
      out << ',';
      if (cursor[e] < est.replicate.size() && est.replicate[cursor[e]] == r) {
        out << format_number(est.values[cursor[e]++]);
      }
    }
    out << '\n';
  }
}

void write_power_csv(std::ostream& out, const std::vector<PowerRow>& rows) {
  out << "a,n,h,reject_rate,mc_se,reps_used,failures\n";
  for (const auto& r : rows) {
    out << format_number(r.a) << ',' << r.n << ',' << format_number(r.h) << ','
        << format_number(r.reject_rate) << ',' << format_number(r.mc_se) << ',' << r.reps_used << ','
        << r.failures << '\n';
  }
}

void write_hstar_csv(std::ostream& out, const HStar& hstar, const FitConfig& config) {
  out << "# n=" << hstar.n() << " h=" << format_number(config.bandwidth) << " p=" << config.degree
      << " kernel=" << config.kernel.name() << " grid=" << format_number(hstar.grid.start) << ':'
      << format_number(hstar.grid.stop) << ':' << hstar.grid.count << '\n';
  const Eigen::MatrixXd& m = hstar.matrix;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if (k) out << ',';
      out << format_number(m(i, k));
    }
    out << '\n';
  }
}

void write_hstar_binary(std::ostream& out, const HStar& hstar, const FitConfig& config) {
  out.write("LPHSTAR1", 8);
  put<std::uint64_t>(out, hstar.n());
  put<double>(out, config.bandwidth);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config.degree));
  const std::string name = config.kernel.name();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<double>(out, hstar.grid.start);
  put<double>(out, hstar.grid.stop);
  put<std::uint64_t>(out, hstar.grid.count);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = hstar.matrix;
  out.write(reinterpret_cast<const char*>(rows.data()),
            static_cast<std::streamsize>(rows.size() * sizeof(double)));
}

HStarFile read_hstar_binary(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "LPHSTAR1") throw InputError("not an H* binary file");
  HStarFile f;
  const auto n = get<std::uint64_t>(in);
  f.bandwidth = get<double>(in);
  f.degree = static_cast<int>(get<std::uint32_t>(in));
  const auto len = get<std::uint32_t>(in);
  if (len > 64) throw InputError("corrupt kernel name in H* file");
  f.kernel.resize(len);
  in.read(f.kernel.data(), len);
  f.grid.start = get<double>(in);
  f.grid.stop = get<double>(in);
  f.grid.count = get<std::uint64_t>(in);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * sizeof(double)));
  if (!in) throw InputError("truncated H* file");
  f.matrix = rows;
  return f;
}

}  // namespace lpanova
