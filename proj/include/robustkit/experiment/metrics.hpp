#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "robustkit/core/problem.hpp"
#include "robustkit/problems/pose_graph.hpp"

namespace robustkit {

/// Geodesic angle between two rotations, in degrees.
double rotation_error_deg(const Eigen::Matrix3d& estimate, const Eigen::Matrix3d& truth);

/// Root-mean-square position error after the rigid alignment of the estimate
/// onto the truth that minimizes it.
template <int D>
double absolute_trajectory_error(const Trajectory<D>& estimate, const Trajectory<D>& truth);

struct DetectionRates {
  double tp_rate = 0.0;
  double fp_rate = 0.0;
};

/// tp = rejected true outliers / true outliers (1 when there are none);
/// fp = rejected true inliers / true inliers (0 when there are none).
DetectionRates detection_rates(const IndexSet& predicted_inliers, const std::vector<bool>& outlier_labels);

}  // namespace robustkit
