#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpanova/global_anova.hpp"
#include "lpanova/inference.hpp"
#include "lpanova/lpfit.hpp"
#include "lpanova/simulate.hpp"
#include "lpanova/vcm.hpp"

namespace lpanova {

inline constexpr const char* kVersion = "1.0.0";

/// Rows of a numeric CSV table. Blank lines and lines starting with '#' are
/// ignored; `line` is the 1-based line number in the source.
struct NumericRow {
  std::size_t line = 0;
  std::vector<double> values;
};

/// Throws InputError naming `source` and the line for malformed cells,
/// non-finite values and inconsistent row widths.
std::vector<NumericRow> read_numeric_rows(std::istream& in, bool header, const std::string& source);

/// Two columns (x, y).
Dataset parse_dataset(std::istream& in, bool header, const std::string& source = "<input>");
Dataset load_csv(const std::string& path, bool header);

/// Columns u, x2..xd, y; the intercept column is added.
VcmDataset parse_vcm_dataset(std::istream& in, bool header, const std::string& source = "<input>");
VcmDataset load_vcm_csv(const std::string& path, bool header);

/// "%.17g"; round-trips every finite double.
std::string format_number(double v);

/// Tool version, resolved configuration and seed, carried by every output.
struct Provenance {
  nlohmann::json config = nlohmann::json::object();
  std::optional<std::uint64_t> seed;

  nlohmann::json to_json() const;
  /// '#'-prefixed lines for CSV and text outputs.
  void write_comment(std::ostream& out) const;
};

void write_dataset_csv(std::ostream& out, const Dataset& data, const Provenance* provenance = nullptr);

nlohmann::json to_json(const FTestResult& test);
nlohmann::json to_json(const GlobalAnova& global);
nlohmann::json to_json(const AnovaTable& table);
nlohmann::json to_json(const StudyResult& study, bool with_values = false);
nlohmann::json to_json(const HStarDiagnostics& diagnostics);
nlohmann::json to_json(const QuadraticFormReport& report);

void write_anova_text(std::ostream& out, const AnovaTable& table);
void write_anova_csv(std::ostream& out, const AnovaTable& table);

/// x0, beta0..betap, fhat; infeasible points leave the fit cells empty.
void write_curve_csv(std::ostream& out, const Curve& curve, int degree);
/// x0, sst, sse, ssr, r2, fhat.
void write_local_anova_csv(std::ostream& out, const AnovaCurve& curve);

/// One row per replicate: replicate, then one column per estimator.
void write_rsq_replicates_csv(std::ostream& out, const RsqStudy& study);
void write_power_csv(std::ostream& out, const std::vector<PowerRow>& rows);

/// Dense H* as CSV: a '#' metadata line (n, h, kernel, grid) and n rows.
void write_hstar_csv(std::ostream& out, const HStar& hstar, const FitConfig& config);

/// Binary layout, little-endian: magic "LPHSTAR1", u64 n, f64 h, u32 degree,
/// u32 kernel-name length, kernel name bytes, f64 grid start, f64 grid stop,
/// u64 grid count, then n·n f64 entries in row-major order.
void write_hstar_binary(std::ostream& out, const HStar& hstar, const FitConfig& config);

struct HStarFile {
  Eigen::MatrixXd matrix;
  double bandwidth = 0.0;
  int degree = 1;
  std::string kernel;
  GridSpec grid;
};

HStarFile read_hstar_binary(std::istream& in);

}  // namespace lpanova
