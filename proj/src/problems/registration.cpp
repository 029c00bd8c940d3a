#include "robustkit/problems/registration.hpp"

#include <algorithm>

#include "robustkit/core/error.hpp"

namespace robustkit {

RigidTransform registration_weighted_solve(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target,
                                           std::span<const double> weights) {
  const Eigen::Index m = source.cols();
  if (target.cols() != m || static_cast<std::size_t>(m) != weights.size()) {
    throw Error(ErrorCode::kDomain, "registration: source, target and weights disagree in size");
  }
  double total = 0.0;
  int support = 0;
  Eigen::Vector3d ps = Eigen::Vector3d::Zero();
  Eigen::Vector3d qs = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    if (w < 0.0) throw Error(ErrorCode::kDomain, "registration: negative weight");
    if (w > 0.0) ++support;
    total += w;
    ps += w * source.col(i);
    qs += w * target.col(i);
  }
  if (support < 3 || !(total > 0.0)) {
    throw Error(ErrorCode::kDegenerate, "registration: fewer than three weighted correspondences");
  }
  ps /= total;
  qs /= total;

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const Eigen::Vector3d p = source.col(i) - ps;
    H += w * p * (target.col(i) - qs).transpose();
    S += w * p * p.transpose();
  }
  // Collinear (or coincident) weighted source points leave a free rotation.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> spread(S, Eigen::EigenvaluesOnly);
  if (spread.eigenvalues()(1) <= 1e-12 * std::max(spread.eigenvalues()(2), 1e-300)) {
    throw Error(ErrorCode::kDegenerate, "registration: weighted source points are collinear");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform out;
  out.rotation = V * D * U.transpose();
  out.translation = qs - out.rotation * ps;
  return out;
}

RegistrationProblem::RegistrationProblem(Eigen::Matrix3Xd source, Eigen::Matrix3Xd target)
    : source_(std::move(source)), target_(std::move(target)) {
  if (source_.cols() != target_.cols()) {
    throw Error(ErrorCode::kDomain, "registration: source and target counts differ");
  }
}

std::vector<double> RegistrationProblem::residuals(const Estimate& x) const {
  std::vector<double> r(size());
  for (Eigen::Index i = 0; i < source_.cols(); ++i) {
    r[static_cast<std::size_t>(i)] = (x.rotation * source_.col(i) + x.translation - target_.col(i)).norm();
  }
  return r;
}

RegistrationProblem::Estimate RegistrationProblem::weighted_solve(std::span<const double> weights) const {
  return registration_weighted_solve(source_, target_, weights);
}

}  // namespace robustkit
