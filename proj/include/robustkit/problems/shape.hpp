#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace robustkit {

/// z = s * Pi * R * B + t, with Pi the first two rows of the identity.
struct WeakPerspectivePose {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  /// False when the alternation hit its sweep cap; the best iterate is returned.
  bool converged = true;
  int sweeps = 0;

  Eigen::Vector2d project(const Eigen::Vector3d& b) const {
    return scale * (rotation * b).head<2>() + translation;
  }
};

struct ShapeSolveOptions {
  int max_sweeps = 200;
  double relative_tolerance = 1e-12;
};

/// Local minimizer of sum_i w_i ||z_i - s Pi R B_i - t||^2.
WeakPerspectivePose shape_weighted_solve(const Eigen::Matrix3Xd& model, const Eigen::Matrix2Xd& image,
                                         std::span<const double> weights, const ShapeSolveOptions& options = {});

/// Objective value of `pose` under the given weights.
double shape_objective(const Eigen::Matrix3Xd& model, const Eigen::Matrix2Xd& image,
                       std::span<const double> weights, const WeakPerspectivePose& pose);

// Weak-perspective 3D-2D shape alignment, r_i = ||z_i - s Pi R B_i - t||.
class ShapeProblem {
 public:
  using Estimate = WeakPerspectivePose;

  ShapeProblem(Eigen::Matrix3Xd model, Eigen::Matrix2Xd image, ShapeSolveOptions options = {});

  std::size_t size() const { return static_cast<std::size_t>(model_.cols()); }
  int residual_dof() const { return 2; }
  std::size_t minimal_support() const { return 4; }

  std::vector<double> residuals(const Estimate& x) const;
  Estimate weighted_solve(std::span<const double> weights) const;

  const Eigen::Matrix3Xd& model() const { return model_; }
  const Eigen::Matrix2Xd& image() const { return image_; }

 private:
  Eigen::Matrix3Xd model_;
  Eigen::Matrix2Xd image_;
  ShapeSolveOptions options_;
};

}  // namespace robustkit
