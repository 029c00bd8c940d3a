#pragma once

#include <Eigen/Dense>

namespace robustkit {

Eigen::Matrix3d hat(const Eigen::Vector3d& w);
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
/// Axis-angle vector of R, angle in [0, pi].
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);
/// Inverse of the right Jacobian of SO(3) at w.
Eigen::Matrix3d so3_right_jacobian_inv(const Eigen::Vector3d& w);

/// Angle wrapped to (-pi, pi].
double wrap_angle(double a);
Eigen::Matrix2d so2_exp(double theta);
double so2_log(const Eigen::Matrix2d& R);

/// Geodesic distance between two rotations, radians.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

/// Nearest rotation (Frobenius) to M.
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& M);

Eigen::Matrix3d quaternion_to_rotation(double qx, double qy, double qz, double qw);

}  // namespace robustkit
