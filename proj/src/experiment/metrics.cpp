#include "robustkit/experiment/metrics.hpp"

#include <cmath>
#include <numbers>

#include "robustkit/core/error.hpp"
#include "robustkit/problems/lie.hpp"

namespace robustkit {

double rotation_error_deg(const Eigen::Matrix3d& estimate, const Eigen::Matrix3d& truth) {
  return rotation_angle_between(estimate, truth) * 180.0 / std::numbers::pi;
}

template <int D>
double absolute_trajectory_error(const Trajectory<D>& estimate, const Trajectory<D>& truth) {
  if (estimate.size() != truth.size() || estimate.size() < 2) {
    throw Error(ErrorCode::kDomain, "ate: trajectories must have equal length >= 2");
  }
  using Vec = Eigen::Matrix<double, D, 1>;
  using Mat = Eigen::Matrix<double, D, D>;
  const double n = static_cast<double>(truth.size());
  Vec me = Vec::Zero();
  Vec mt = Vec::Zero();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    me += estimate[i].translation;
    mt += truth[i].translation;
  }
  me /= n;
  mt /= n;
  Mat H = Mat::Zero();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    H += (estimate[i].translation - me) * (truth[i].translation - mt).transpose();
  }
  Eigen::JacobiSVD<Mat> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat S = Mat::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) S(D - 1, D - 1) = -1.0;
  const Mat R = svd.matrixV() * S * svd.matrixU().transpose();
  double sq = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sq += (R * (estimate[i].translation - me) + mt - truth[i].translation).squaredNorm();
  }
  return std::sqrt(sq / n);
}

template double absolute_trajectory_error<2>(const Trajectory<2>&, const Trajectory<2>&);
template double absolute_trajectory_error<3>(const Trajectory<3>&, const Trajectory<3>&);

DetectionRates detection_rates(const IndexSet& predicted_inliers, const std::vector<bool>& outlier_labels) {
  std::vector<bool> kept(outlier_labels.size(), false);
  for (std::size_t i : predicted_inliers) {
    if (i >= kept.size()) throw Error(ErrorCode::kDomain, "detection_rates: inlier index out of range");
    kept[i] = true;
  }
  std::size_t outliers = 0;
  std::size_t inliers = 0;
  std::size_t caught = 0;
  std::size_t wrongly = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (outlier_labels[i]) {
      ++outliers;
      if (!kept[i]) ++caught;
    } else {
      ++inliers;
      if (!kept[i]) ++wrongly;
    }
  }
  DetectionRates out;
  out.tp_rate = outliers == 0 ? 1.0 : static_cast<double>(caught) / static_cast<double>(outliers);
  out.fp_rate = inliers == 0 ? 0.0 : static_cast<double>(wrongly) / static_cast<double>(inliers);
  return out;
}

}  // namespace robustkit
