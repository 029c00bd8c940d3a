#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "robustkit/core/error.hpp"
#include "robustkit/experiment/metrics.hpp"
#include "robustkit/io/generators.hpp"
#include "robustkit/problems/lie.hpp"
#include "robustkit/problems/shape.hpp"

using namespace robustkit;

TEST(Shape, RecoversPoseWithoutNoise) {
  std::mt19937_64 rng(8);
  int recovered = 0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Matrix3d rot = random_rotation(rng);
    const auto inst = gen_shape(30, 1.5, rot, Eigen::Vector2d(0.2, -0.3), 0.0, static_cast<std::uint64_t>(k));
    const ShapeProblem p(inst.problem.model, inst.problem.image);
    const auto est = p.weighted_solve(std::vector<double>(30, 1.0));
    // Weak perspective only sees the first two rows of R.
    const bool ok = (est.rotation.topRows<2>() - rot.topRows<2>()).norm() < 1e-6 &&
                    std::abs(est.scale - 1.5) < 1e-6 && (est.translation - Eigen::Vector2d(0.2, -0.3)).norm() < 1e-6;
    recovered += ok ? 1 : 0;
    EXPECT_NEAR(est.rotation.determinant(), 1.0, 1e-9);
  }
  EXPECT_EQ(recovered, 20);
}

TEST(Shape, ObjectiveMatchesResiduals) {
  std::mt19937_64 rng(9);
  const auto inst = gen_shape(12, 2.0, random_rotation(rng), Eigen::Vector2d::Zero(), 0.05, 2);
  const ShapeProblem p(inst.problem.model, inst.problem.image);
  std::vector<double> w(12, 1.0);
  w[3] = 0.0;
  w[5] = 2.5;
  const auto est = p.weighted_solve(w);
  const auto r = p.residuals(est);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += w[i] * r[i] * r[i];
  EXPECT_NEAR(shape_objective(inst.problem.model, inst.problem.image, w, est), s, 1e-12);
}

// Local solver: a small perturbation of the solution never lowers the objective.
TEST(Shape, SolutionIsLocalMinimum) {
  std::mt19937_64 rng(10);
  const auto inst = gen_shape(20, 1.0, random_rotation(rng), Eigen::Vector2d(1, 1), 0.05, 4);
  const std::vector<double> w(20, 1.0);
  const auto est = shape_weighted_solve(inst.problem.model, inst.problem.image, w);
  const double f = shape_objective(inst.problem.model, inst.problem.image, w, est);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 50; ++k) {
    WeakPerspectivePose q = est;
    q.rotation = est.rotation * so3_exp(1e-3 * Eigen::Vector3d(n01(rng), n01(rng), n01(rng)));
    q.scale *= 1.0 + 1e-3 * n01(rng);
    q.translation += 1e-3 * Eigen::Vector2d(n01(rng), n01(rng));
    EXPECT_GE(shape_objective(inst.problem.model, inst.problem.image, w, q), f - 1e-12);
  }
}

TEST(Shape, DegenerateSupport) {
  const auto inst = gen_shape(6, 1.0, Eigen::Matrix3d::Identity(), Eigen::Vector2d::Zero(), 0.0, 1);
  try {
    shape_weighted_solve(inst.problem.model, inst.problem.image, std::vector<double>{1, 1, 1, 0, 0, 0});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
  }
  EXPECT_THROW(ShapeProblem(inst.problem.model, Eigen::Matrix2Xd(2, 5)), Error);
  EXPECT_THROW(gen_shape(6, -1.0, Eigen::Matrix3d::Identity(), Eigen::Vector2d::Zero(), 0.0, 1), Error);
}
