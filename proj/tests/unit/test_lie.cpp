#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "robustkit/io/generators.hpp"
#include "robustkit/problems/lie.hpp"

using namespace robustkit;

// scipy.spatial.transform.Rotation.from_rotvec([0.3, -0.4, 0.5]).
TEST(So3, ExpReference) {
  Eigen::Matrix3d expected;
  expected << 0.80340057, -0.51690398, -0.29556353, 0.40182139, 0.83696633, -0.37151977, 0.43941677, 0.17971545,
      0.8801223;
  EXPECT_LT((so3_exp(Eigen::Vector3d(0.3, -0.4, 0.5)) - expected).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(So3, LogInvertsExp) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 200; ++k) {
    Eigen::Vector3d w(n01(rng), n01(rng), n01(rng));
    // Stay inside the injectivity radius, including angles close to pi.
    if (w.norm() > 3.1) w *= 3.1 / w.norm();
    if (k % 20 == 0) w = w.normalized() * (M_PI - 1e-6);
    if (k % 20 == 1) w *= 1e-9;
    EXPECT_LT((so3_log(so3_exp(w)) - w).norm(), 1e-6 * std::max(1.0, w.norm())) << w.transpose();
  }
  EXPECT_EQ(so3_log(Eigen::Matrix3d::Identity()).norm(), 0.0);
}

TEST(So3, HatIsSkew) {
  const Eigen::Vector3d a(1, 2, 3);
  const Eigen::Vector3d b(-2, 0.5, 4);
  EXPECT_LT((hat(a) * b - a.cross(b)).norm(), 1e-15);
}

TEST(So3, ProjectionAndAngle) {
  std::mt19937_64 rng(2);
  const Eigen::Matrix3d r = random_rotation(rng);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  EXPECT_LT((project_to_so3(r + 1e-4 * Eigen::Matrix3d::Ones()) - r).norm(), 1e-3);
  EXPECT_LT((project_to_so3(r) - r).norm(), 1e-12);
  EXPECT_NEAR(rotation_angle_between(r, r * so3_exp(Eigen::Vector3d(0, 0, 0.25))), 0.25, 1e-12);
  // A reflection input still lands on SO(3).
  EXPECT_NEAR(project_to_so3(-Eigen::Matrix3d::Identity()).determinant(), 1.0, 1e-12);
}

// scipy Rotation.from_quat([0.1, 0.2, 0.3, 0.9]) (normalised, scalar last).
TEST(So3, QuaternionReference) {
  Eigen::Matrix3d expected;
  expected << 0.72631579, -0.52631579, 0.44210526, 0.61052632, 0.78947368, -0.06315789, -0.31578947, 0.31578947,
      0.89473684;
  EXPECT_LT((quaternion_to_rotation(0.1, 0.2, 0.3, 0.9) - expected).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(So2, ExpLogAndWrap) {
  EXPECT_NEAR(wrap_angle(3.0 * M_PI / 2.0), -M_PI / 2.0, 1e-12);
  EXPECT_NEAR(wrap_angle(-7.0), -7.0 + 2.0 * M_PI, 1e-12);
  for (double a : {-3.0, -1.0, 0.0, 0.5, 3.1}) EXPECT_NEAR(so2_log(so2_exp(a)), a, 1e-12);
  EXPECT_NEAR(so2_log(so2_exp(1.0) * so2_exp(2.5)), wrap_angle(3.5), 1e-12);
}
