#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "robustkit/core/error.hpp"
#include "robustkit/experiment/metrics.hpp"
#include "robustkit/io/generators.hpp"
#include "robustkit/problems/lie.hpp"
#include "robustkit/problems/registration.hpp"

using namespace robustkit;

TEST(Registration, ExactRecoveryWithoutNoise) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const RigidTransform truth{random_rotation(rng), Eigen::Vector3d(k * 0.1, -1.0, 2.0)};
    const auto inst = gen_registration(10, truth, 0.0, static_cast<std::uint64_t>(k));
    const RegistrationProblem p(inst.problem.source, inst.problem.target);
    const auto est = p.weighted_solve(std::vector<double>(10, 1.0));
    EXPECT_LT(rotation_error_deg(est.rotation, truth.rotation), 1e-8);
    EXPECT_LT((est.translation - truth.translation).norm(), 1e-10);
    EXPECT_NEAR(est.rotation.determinant(), 1.0, 1e-12);
    for (double r : p.residuals(est)) EXPECT_LT(r, 1e-10);
  }
}

// Three non-collinear points pin the transform; integer weights act as duplicates.
TEST(Registration, WeightsActAsMultiplicity) {
  std::mt19937_64 rng(4);
  const RigidTransform truth{random_rotation(rng), Eigen::Vector3d(0.5, 0.2, -0.1)};
  const auto inst = gen_registration(6, truth, 0.05, 9);
  const std::vector<double> w{2, 1, 3, 1, 1, 2};
  const auto a = registration_weighted_solve(inst.problem.source, inst.problem.target, w);

  Eigen::Matrix3Xd src(3, 10);
  Eigen::Matrix3Xd tgt(3, 10);
  int c = 0;
  for (int i = 0; i < 6; ++i) {
    for (int r = 0; r < static_cast<int>(w[static_cast<std::size_t>(i)]); ++r, ++c) {
      src.col(c) = inst.problem.source.col(i);
      tgt.col(c) = inst.problem.target.col(i);
    }
  }
  const auto b = registration_weighted_solve(src, tgt, std::vector<double>(10, 1.0));
  EXPECT_LT((a.rotation - b.rotation).norm(), 1e-10);
  EXPECT_LT((a.translation - b.translation).norm(), 1e-10);
}

TEST(Registration, NeverReturnsReflection) {
  // Mirror-image target: the best proper rotation is still returned.
  Eigen::Matrix3Xd src(3, 4);
  src << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  Eigen::Matrix3Xd tgt = src;
  tgt.row(2) *= -1.0;
  const auto est = registration_weighted_solve(src, tgt, std::vector<double>(4, 1.0));
  EXPECT_NEAR(est.rotation.determinant(), 1.0, 1e-12);
}

TEST(Registration, DegenerateSupport) {
  Eigen::Matrix3Xd src(3, 4);
  src << 0, 1, 2, 0, 0, 0, 0, 1, 0, 0, 0, 1;
  try {
    registration_weighted_solve(src, src, std::vector<double>{1, 1, 0, 0});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
  // Collinear support.
  EXPECT_THROW(registration_weighted_solve(src, src, std::vector<double>{1, 1, 1, 0}), Error);
  EXPECT_THROW(RegistrationProblem(src, Eigen::Matrix3Xd(3, 3)), Error);
}

TEST(Registration, OutliersLabelledAndDisplaced) {
  const auto clean = gen_registration(100, RigidTransform{}, 0.0, 5);
  const auto inst = inject_outliers(clean, 0.3, 6);
  int count = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double d = (inst.problem.target.col(static_cast<Eigen::Index>(i)) -
                      clean.problem.target.col(static_cast<Eigen::Index>(i)))
                         .norm();
    if (inst.outlier_labels[i]) {
      ++count;
    } else {
      EXPECT_EQ(d, 0.0);
    }
  }
  EXPECT_EQ(count, 30);
}
