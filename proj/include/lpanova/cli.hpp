#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lpanova::cli {

enum class GridMode { DataRange, Padded };
enum class OutputFormat { Default, Text, Json, Csv };

struct CliConfig {
  std::string command;
  std::string input;
  bool header = false;
  std::string kernel = "epanechnikov";
  double h = 0.0;
  int p = 1;
  std::size_t grid_count = 200;
  std::optional<double> grid_start;
  std::optional<double> grid_stop;
  std::optional<double> grid_step;
  GridMode grid_mode = GridMode::DataRange;
  std::string sst = "integrated";
  std::string f_variant = "conservative";
  OutputFormat format = OutputFormat::Default;
  std::uint64_t seed = 1;
  std::size_t reps = 400;
  std::string output;
  std::size_t threads = 0;

  // simulate
  std::string study = "rsq";
  std::string family = "bump";
  double sigma = 1.0;
  std::vector<double> a_values{0.0};
  std::vector<std::size_t> n_values{50};
  std::vector<double> h_values;
  double level = 0.05;
  std::string write_dataset;

  // hstar
  std::string matrix_output;
  std::string matrix_format = "csv";
  std::string policy = "fail";
  std::size_t max_n = 5000;
};

/// Parses argv (flags, LPANOVA_* environment overrides and an optional
/// --config file). Returns the exit code to use when parsing ends the run
/// (help, or a usage error reported on `err`).
std::optional<int> parse(int argc, const char* const* argv, CliConfig& config, std::ostream& out,
                         std::ostream& err);

/// 0 on success, 1 on input errors, 2 on numerical failures.
int run(const CliConfig& config, std::ostream& out, std::ostream& err);

int main(int argc, const char* const* argv);

}  // namespace lpanova::cli
