#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpanova/grid.hpp"
#include "lpanova/kernel.hpp"

namespace lpanova {

/// Paired covariate/response sample. Construct through `Dataset::make`, which
/// enforces equal lengths, finiteness and n >= 2.
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;

  static Dataset make(std::vector<double> x, std::vector<double> y);
  void validate() const;
  std::size_t size() const { return x.size(); }
  double mean_y() const;
  double min_x() const;
  double max_x() const;
};

struct FitConfig {
  int degree = 1;
  double bandwidth = 0.0;
  Kernel kernel{};
  /// Explicit grid; when empty the grid spans [min x, max x] with `grid_count` points.
  std::optional<GridSpec> grid;
  std::size_t grid_count = 200;

  void validate() const;
};

GridSpec resolve_grid(const Dataset& data, const FitConfig& config);

/// Weighted least squares fit of a degree-p polynomial at one point.
struct LocalFit {
  double x0 = 0.0;
  std::vector<double> beta;  // β̂_j in units of y·x^{-j}
  double fhat = 0.0;         // kernel density estimate at x0
  std::size_t n_eff = 0;     // observations with positive weight
  double condition = 1.0;    // condition number of the equilibrated local Gram matrix

  /// Local polynomial evaluated at xi: Σ β̂_j (xi - x0)^j.
  double fitted(double xi) const;
};

/// Condition numbers above this make a local design singular.
inline constexpr double kMaxCondition = 1e12;

double kde(const Dataset& data, double x0, double h, const Kernel& kernel);

/// Throws SingularDesign or EmptyWindow.
LocalFit local_fit(const Dataset& data, double x0, const FitConfig& config);

enum class FailureKind { SingularDesign, EmptyWindow };

struct PointFailure {
  std::size_t grid_index = 0;
  FailureKind kind = FailureKind::SingularDesign;
  std::string message;
};

struct CurvePoint {
  double x0 = 0.0;
  std::optional<LocalFit> fit;
  std::optional<PointFailure> failure;
};

struct Curve {
  GridSpec grid;
  std::vector<CurvePoint> points;

  std::size_t failure_count() const;
  /// Throws SingularDesign (or EmptyWindow) naming every failed grid index.
  void require_all_feasible() const;
};

/// Local fits over the whole grid. Per-point failures are recorded, not thrown.
Curve curve(const Dataset& data, const FitConfig& config);

}  // namespace lpanova
