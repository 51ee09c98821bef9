#include "lpanova/grid.hpp"

#include <cmath>
#include <string>

#include "lpanova/errors.hpp"

namespace lpanova {

GridSpec GridSpec::from_step(double start, double stop, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InputError("grid step must be positive");
  if (!(stop > start)) throw InputError("grid stop must exceed grid start");
  const double intervals = std::floor((stop - start) / step + 1e-9);
  GridSpec g{start, start + intervals * step, static_cast<std::size_t>(intervals) + 1};
  g.validate();
  return g;
}

GridSpec GridSpec::padded(double lo, double hi, double pad, std::size_t count) {
  GridSpec g{lo - pad, hi + pad, count};
  g.validate();
  return g;
}

double GridSpec::step() const { return (stop - start) / static_cast<double>(count - 1); }

double GridSpec::at(std::size_t i) const {
  if (i + 1 == count) return stop;
  return start + static_cast<double>(i) * step();
}

std::vector<double> GridSpec::points() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = at(i);
  return out;
}

std::vector<double> GridSpec::trapezoid_weights() const {
  const double dx = step();
  std::vector<double> w(count, dx);
  w.front() = dx / 2.0;
  w.back() = dx / 2.0;
  return w;
}

void GridSpec::validate() const {
  if (count < 2) throw InputError("grid needs at least 2 points, got " + std::to_string(count));
  if (!std::isfinite(start) || !std::isfinite(stop) || !(stop > start))
    throw InputError("grid endpoints must be finite with stop > start");
}

void QuadratureSpec::validate() const {
  if (nodes < 3 || nodes % 2 == 0)
    throw InputError("Simpson quadrature needs an odd node count >= 3");
}

double simpson(const std::function<double(double)>& f, double a, double b,
               const QuadratureSpec& spec) {
  spec.validate();
  if (b <= a) return 0.0;
  const std::size_t intervals = spec.nodes - 1;
  const double h = (b - a) / static_cast<double>(intervals);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) {
    const double x = a + static_cast<double>(i) * h;
    sum += (i % 2 == 1 ? 4.0 : 2.0) * f(x);
  }
  return sum * h / 3.0;
}

double simpson_tabulated(const std::vector<double>& values, double step) {
  if (values.size() < 3 || values.size() % 2 == 0)
    throw InputError("tabulated Simpson needs an odd number of values >= 3");
  double sum = values.front() + values.back();
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * values[i];
  return sum * step / 3.0;
}

}  // namespace lpanova
