#include "weighted_ls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lpanova/errors.hpp"
#include "lpanova/lpfit.hpp"

namespace lpanova::detail {

WeightedLeastSquares::WeightedLeastSquares(Eigen::MatrixXd design, Eigen::VectorXd weights)
    : design_(std::move(design)), weights_(std::move(weights)) {
  const Eigen::Index q = design_.cols();
  if (design_.rows() < q) throw SingularDesign("fewer weighted observations than coefficients");

  const Eigen::MatrixXd gram = design_.transpose() * weights_.asDiagonal() * design_;
  scale_.resize(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double d = gram(j, j);
    if (!(d > 0.0) || !std::isfinite(d)) throw SingularDesign("local design has a null column");
    scale_(j) = 1.0 / std::sqrt(d);
  }
  const Eigen::MatrixXd equilibrated = scale_.asDiagonal() * gram * scale_.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(equilibrated, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxCondition)) {
    std::ostringstream msg;
    msg << "local design is singular (condition " << condition_ << ")";
    throw SingularDesign(msg.str());
  }

  Eigen::LLT<Eigen::MatrixXd> llt(equilibrated);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
  } else {
    ldlt_.compute(equilibrated);
    if (ldlt_.info() != Eigen::Success) throw SingularDesign("local Gram matrix factorization failed");
    use_ldlt_ = true;
  }
}

Eigen::VectorXd WeightedLeastSquares::solve_gram(const Eigen::VectorXd& rhs) const {
  const Eigen::VectorXd scaled = scale_.asDiagonal() * rhs;
  Eigen::VectorXd sol;
  if (use_ldlt_) {
    sol = ldlt_.solve(scaled);
  } else {
    const auto l = factor_.triangularView<Eigen::Lower>();
    sol = l.transpose().solve(l.solve(scaled));
  }
  return scale_.asDiagonal() * sol;
}

Eigen::VectorXd WeightedLeastSquares::fit(const Eigen::VectorXd& y) const {
  Eigen::VectorXd beta = solve_gram(design_.transpose() * (weights_.array() * y.array()).matrix());
  const Eigen::VectorXd residual = y - design_ * beta;
  beta += solve_gram(design_.transpose() * (weights_.array() * residual.array()).matrix());
  return beta;
}

Eigen::MatrixXd WeightedLeastSquares::whitened() const {
  // Q = Z D L^{-T}  =>  Q Qᵀ = Z D (D A D)^{-1} D Zᵀ = Z A^{-1} Zᵀ
  const Eigen::MatrixXd zd = design_ * scale_.asDiagonal();
  if (!use_ldlt_) {
    const auto l = factor_.triangularView<Eigen::Lower>();
    return l.solve(zd.transpose()).transpose();
  }
  // LDLT: P A Pᵀ = L D Lᵀ
  Eigen::MatrixXd t = ldlt_.transpositionsP() * zd.transpose();
  t = ldlt_.matrixL().solve(t);
  const Eigen::VectorXd d = ldlt_.vectorD();
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (!(d(j) > 0.0)) throw SingularDesign("local Gram matrix is not positive definite");
    t.row(j) /= std::sqrt(d(j));
  }
  return t.transpose();
}

Window kernel_window(std::span<const double> x, double x0, double h, const Kernel& kernel) {
  Window w;
  std::vector<double> weights;
  std::vector<double> active_x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double k = kernel.scaled(x[i] - x0, h);
    if (k > 0.0) {
      w.index.push_back(i);
      weights.push_back(k);
      active_x.push_back(x[i]);
      w.weight_sum += k;
    }
  }
  w.weight = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  std::sort(active_x.begin(), active_x.end());
  w.distinct = static_cast<std::size_t>(std::unique(active_x.begin(), active_x.end()) - active_x.begin());
  return w;
}

Eigen::MatrixXd scaled_polynomial_design(std::span<const double> x, const Window& window,
                                         double x0, double h, int degree) {
  const auto rows = static_cast<Eigen::Index>(window.index.size());
  Eigen::MatrixXd z(rows, degree + 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double t = (x[window.index[r]] - x0) / h;
    double power = 1.0;
    for (int j = 0; j <= degree; ++j) {
      z(r, j) = power;
      power *= t;
    }
  }
  return z;
}

}  // namespace lpanova::detail
