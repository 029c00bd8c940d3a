#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace robustkit {

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

/// argmin_{R in SO(3), t} sum_i w_i ||R p_i + t - q_i||^2 in closed form.
RigidTransform registration_weighted_solve(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target,
                                           std::span<const double> weights);

// Point-to-point 3D registration with known correspondences, r_i = ||R p_i + t - q_i||.
class RegistrationProblem {
 public:
  using Estimate = RigidTransform;

  RegistrationProblem(Eigen::Matrix3Xd source, Eigen::Matrix3Xd target);

  std::size_t size() const { return static_cast<std::size_t>(source_.cols()); }
  int residual_dof() const { return 3; }
  std::size_t minimal_support() const { return 3; }

  std::vector<double> residuals(const Estimate& x) const;
  Estimate weighted_solve(std::span<const double> weights) const;

  const Eigen::Matrix3Xd& source() const { return source_; }
  const Eigen::Matrix3Xd& target() const { return target_; }

 private:
  Eigen::Matrix3Xd source_;
  Eigen::Matrix3Xd target_;
};

}  // namespace robustkit
