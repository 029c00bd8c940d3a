#include "robustkit/problems/shape.hpp"

#include <algorithm>
#include <cmath>

#include "robustkit/core/error.hpp"

namespace robustkit {
namespace {

struct Centered {
  Eigen::Matrix3Xd b;
  Eigen::Matrix2Xd z;
  Eigen::VectorXd w;
  Eigen::Vector3d b_mean;
  Eigen::Vector2d z_mean;
};

double centered_cost(const Centered& c, double s, const Eigen::Matrix3d& R) {
  const Eigen::Matrix<double, 2, 3> P = s * R.topRows<2>();
  double f = 0.0;
  for (Eigen::Index i = 0; i < c.b.cols(); ++i) f += c.w(i) * (c.z.col(i) - P * c.b.col(i)).squaredNorm();
  return f;
}

}  // namespace

double shape_objective(const Eigen::Matrix3Xd& model, const Eigen::Matrix2Xd& image,
                       std::span<const double> weights, const WeakPerspectivePose& pose) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < model.cols(); ++i) {
    f += weights[static_cast<std::size_t>(i)] * (image.col(i) - pose.project(model.col(i))).squaredNorm();
  }
  return f;
}

WeakPerspectivePose shape_weighted_solve(const Eigen::Matrix3Xd& model, const Eigen::Matrix2Xd& image,
                                         std::span<const double> weights, const ShapeSolveOptions& options) {
  const Eigen::Index m = model.cols();
  if (image.cols() != m || static_cast<std::size_t>(m) != weights.size()) {
    throw Error(ErrorCode::kDomain, "shape: model, image and weights disagree in size");
  }
  Centered c;
  c.w = Eigen::Map<const Eigen::VectorXd>(weights.data(), m);
  if ((c.w.array() < 0.0).any()) throw Error(ErrorCode::kDomain, "shape: negative weight");
  if ((c.w.array() > 0.0).count() < 4) {
    throw Error(ErrorCode::kDegenerate, "shape: fewer than four weighted correspondences");
  }
  const double total = c.w.sum();
  c.b_mean = model * c.w / total;
  c.z_mean = image * c.w / total;
  c.b = model.colwise() - c.b_mean;
  c.z = image.colwise() - c.z_mean;

  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  Eigen::Matrix<double, 2, 3> Zb = Eigen::Matrix<double, 2, 3>::Zero();
  double b_norm = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    S += c.w(i) * c.b.col(i) * c.b.col(i).transpose();
    Zb += c.w(i) * c.z.col(i) * c.b.col(i).transpose();
    b_norm += c.w(i) * c.b.col(i).squaredNorm();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> spread(S, Eigen::EigenvaluesOnly);
  if (spread.eigenvalues()(0) <= 1e-12 * std::max(spread.eigenvalues()(2), 1e-300)) {
    throw Error(ErrorCode::kDegenerate, "shape: weighted model points are rank deficient");
  }

  // Start from the unconstrained affine camera projected onto scaled orthonormal rows.
  const Eigen::Matrix<double, 2, 3> affine = Zb * S.inverse();
  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> asvd(affine, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix<double, 2, 3> rows = asvd.matrixU() * asvd.matrixV().leftCols<2>().transpose();
  Eigen::Matrix3d R;
  R.row(0) = rows.row(0);
  R.row(1) = rows.row(1);
  R.row(2) = rows.row(0).cross(rows.row(1));
  double s = std::max(0.5 * (asvd.singularValues()(0) + asvd.singularValues()(1)), 1e-12);
  double f = centered_cost(c, s, R);

  // Lift each image point with the depth the current pose assigns it, then solve
  // the full 3D similarity alignment. Neither step increases the cost.
  WeakPerspectivePose out;
  out.converged = false;
  int sweep = 0;
  const double floor = 1e-30 * std::max(1.0, c.z.squaredNorm());
  while (sweep < options.max_sweeps) {
    if (f <= floor) {
      out.converged = true;
      break;
    }
    ++sweep;
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (c.w(i) == 0.0) continue;
      Eigen::Vector3d u;
      u.head<2>() = c.z.col(i);
      u(2) = s * R.row(2).dot(c.b.col(i));
      C += c.w(i) * u * c.b.col(i).transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d R_new = svd.matrixU() * D * svd.matrixV().transpose();
    const double s_new = (svd.singularValues().asDiagonal() * D).trace() / b_norm;
    if (!(s_new > 0.0)) break;
    const double f_new = centered_cost(c, s_new, R_new);
    if (f_new > f) {  // stagnated at round-off level; keep the better iterate
      out.converged = true;
      break;
    }
    const double drop = f - f_new;
    R = R_new;
    s = s_new;
    f = f_new;
    if (drop <= options.relative_tolerance * f) {
      out.converged = true;
      break;
    }
  }
  if (!(s > 0.0)) throw Error(ErrorCode::kDegenerate, "shape: non-positive scale");
  out.scale = s;
  out.rotation = R;
  out.translation = c.z_mean - s * R.topRows<2>() * c.b_mean;
  out.sweeps = sweep;
  if (f <= floor) out.converged = true;
  return out;
}

ShapeProblem::ShapeProblem(Eigen::Matrix3Xd model, Eigen::Matrix2Xd image, ShapeSolveOptions options)
    : model_(std::move(model)), image_(std::move(image)), options_(options) {
  if (model_.cols() != image_.cols()) throw Error(ErrorCode::kDomain, "shape: model and image counts differ");
}

std::vector<double> ShapeProblem::residuals(const Estimate& x) const {
  std::vector<double> r(size());
  for (Eigen::Index i = 0; i < model_.cols(); ++i) {
    r[static_cast<std::size_t>(i)] = (image_.col(i) - x.project(model_.col(i))).norm();
  }
  return r;
}

ShapeProblem::Estimate ShapeProblem::weighted_solve(std::span<const double> weights) const {
  return shape_weighted_solve(model_, image_, weights, options_);
}

}  // namespace robustkit
