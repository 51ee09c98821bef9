#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace lpanova {

/// Uniform grid of `count` points from `start` to `stop` inclusive.
struct GridSpec {
  double start = 0.0;
  double stop = 1.0;
  std::size_t count = 200;

  /// Grid from an explicit step; `stop` is snapped to the last whole step.
  static GridSpec from_step(double start, double stop, double step);
  /// Grid covering [lo - pad, hi + pad].
  static GridSpec padded(double lo, double hi, double pad, std::size_t count);

  double step() const;
  double at(std::size_t i) const;
  std::vector<double> points() const;
  /// Composite trapezoid weights; Σ w_i f(x_i) approximates ∫ f over the grid.
  std::vector<double> trapezoid_weights() const;
  void validate() const;
};

/// Composite Simpson rule with an odd node count (at least 3).
struct QuadratureSpec {
  std::size_t nodes = 2001;
  void validate() const;
};

double simpson(const std::function<double(double)>& f, double a, double b,
               const QuadratureSpec& spec);

/// Simpson rule over already tabulated equally spaced values (odd length).
double simpson_tabulated(const std::vector<double>& values, double step);

}  // namespace lpanova
