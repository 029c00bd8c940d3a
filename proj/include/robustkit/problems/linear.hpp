#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace robustkit {

/// argmin_x sum_i w_i (y_i - a_i^T x)^2. Throws RankDeficient when the rows with
/// positive weight do not determine x.
Eigen::VectorXd linear_weighted_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                      std::span<const double> weights);

/// argmin_x max_{w_i > 0} |y_i - a_i^T x|, exact, by enumerating the (n+1)-row
/// reference sets of the Chebyshev alternation. Meant for small problems.
Eigen::VectorXd linear_minimax_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                     std::span<const double> weights);

// Scalar-residual linear regression, r_i = |y_i - a_i^T x|.
class LinearProblem {
 public:
  using Estimate = Eigen::VectorXd;

  LinearProblem(Eigen::MatrixXd design, Eigen::VectorXd observations);

  std::size_t size() const { return static_cast<std::size_t>(design_.rows()); }
  int residual_dof() const { return 1; }
  std::size_t minimal_support() const { return static_cast<std::size_t>(design_.cols()); }

  std::vector<double> residuals(const Estimate& x) const;
  Estimate weighted_solve(std::span<const double> weights) const;
  Estimate minimax_solve(std::span<const double> weights) const;

  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& observations() const { return observations_; }

 private:
  Eigen::MatrixXd design_;
  Eigen::VectorXd observations_;
};

}  // namespace robustkit
