#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "robustkit/core/error.hpp"
#include "robustkit/io/generators.hpp"
#include "robustkit/problems/lie.hpp"

using namespace robustkit;

TEST(Generators, LinearIsSeededAndConsistent) {
  const auto a = gen_linear(20, 3, 0.0, 9);
  const auto b = gen_linear(20, 3, 0.0, 9);
  EXPECT_EQ(a.problem.design, b.problem.design);
  EXPECT_EQ(a.problem.observations, b.problem.observations);
  EXPECT_LT((a.problem.design * a.ground_truth - a.problem.observations).norm(), 1e-12);
  EXPECT_NE(gen_linear(20, 3, 0.0, 10).problem.design, a.problem.design);
  EXPECT_THROW(gen_linear(2, 3, 0.1, 0), Error);
}

TEST(Generators, OutlierCountIsFloorOfRate) {
  const auto base = gen_linear(37, 2, 0.01, 1);
  for (double rate : {0.0, 0.1, 0.5, 0.9}) {
    const auto inst = inject_outliers(base, rate, 2);
    int n = 0;
    for (bool o : inst.outlier_labels) n += o ? 1 : 0;
    EXPECT_EQ(n, static_cast<int>(std::floor(rate * 37)));
  }
  EXPECT_THROW(inject_outliers(base, 1.0, 2), Error);
  EXPECT_THROW(inject_outliers(base, -0.1, 2), Error);
}

TEST(Generators, LinearOutlierOffsetsInRange) {
  const auto base = gen_linear(50, 2, 0.0, 3);
  const auto inst = inject_outliers(base, 0.4, 4);
  for (std::size_t i = 0; i < 50; ++i) {
    const double d = std::abs(inst.problem.observations(static_cast<Eigen::Index>(i)) -
                              base.problem.observations(static_cast<Eigen::Index>(i)));
    if (inst.outlier_labels[i]) {
      EXPECT_GE(d, 1.0);
      EXPECT_LE(d, 10.0);
    } else {
      EXPECT_EQ(d, 0.0);
    }
  }
}

TEST(Generators, RandomRotationIsProper) {
  std::mt19937_64 rng(1);
  Eigen::Vector3d mean_axis = Eigen::Vector3d::Zero();
  for (int k = 0; k < 2000; ++k) {
    const Eigen::Matrix3d r = random_rotation(rng);
    EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    mean_axis += r.col(2);
  }
  // Haar measure: the image of a fixed axis is uniform on the sphere.
  EXPECT_LT((mean_axis / 2000.0).norm(), 0.06);
}

TEST(Generators, GridTopology) {
  GridConfig cfg;
  const auto inst = gen_grid_2d(cfg, 1);
  EXPECT_EQ(inst.problem.vertices.size(), 25u);
  EXPECT_EQ(inst.problem.odometry.size(), 24u);
  // 5x5 lattice: 40 neighbour pairs, 24 along the traversal.
  EXPECT_EQ(inst.problem.loop_closures.size(), 16u);
  EXPECT_EQ(inst.outlier_labels.size(), 16u);
  for (const auto& e : inst.problem.odometry) EXPECT_EQ(e.to, e.from + 1);
  for (const auto& e : inst.problem.loop_closures) {
    const auto& a = inst.ground_truth[static_cast<std::size_t>(e.from)];
    const auto& b = inst.ground_truth[static_cast<std::size_t>(e.to)];
    EXPECT_NEAR((a.translation - b.translation).norm(), 1.0, 1e-12);
  }
}

TEST(Generators, GridLoopClosureProbability) {
  GridConfig cfg;
  cfg.rows = cfg.cols = 10;
  cfg.loop_closure_prob = 0.0;
  EXPECT_TRUE(gen_grid_2d(cfg, 1).problem.loop_closures.empty());
  cfg.loop_closure_prob = 0.5;
  const auto n = gen_grid_2d(cfg, 1).problem.loop_closures.size();
  EXPECT_GT(n, 20u);
  EXPECT_LT(n, 61u);
}

TEST(Generators, PoseGraphOutliersKeepOdometry) {
  SphereConfig cfg;
  const auto base = gen_sphere_3d(cfg, 4);
  const auto inst = inject_outliers(base, 0.5, 5);
  ASSERT_EQ(inst.problem.odometry.size(), base.problem.odometry.size());
  for (std::size_t i = 0; i < base.problem.odometry.size(); ++i) {
    EXPECT_EQ(inst.problem.odometry[i].measurement.translation, base.problem.odometry[i].measurement.translation);
  }
  std::size_t changed = 0;
  for (std::size_t i = 0; i < base.problem.loop_closures.size(); ++i) {
    const bool diff =
        inst.problem.loop_closures[i].measurement.translation != base.problem.loop_closures[i].measurement.translation;
    EXPECT_EQ(diff, static_cast<bool>(inst.outlier_labels[i]));
    changed += diff ? 1 : 0;
  }
  EXPECT_EQ(changed, base.problem.loop_closures.size() / 2);
}

TEST(Generators, SeedDerivation) {
  EXPECT_EQ(mix_seed(0), mix_seed(0));
  EXPECT_NE(mix_seed(0), mix_seed(1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 10; ++a) {
    for (std::uint64_t b = 0; b < 10; ++b) seen.insert(derive_seed(42, a, b));
  }
  EXPECT_EQ(seen.size(), 100u);
}
