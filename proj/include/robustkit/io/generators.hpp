#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "robustkit/problems/pose_graph.hpp"
#include "robustkit/problems/registration.hpp"
#include "robustkit/problems/shape.hpp"

namespace robustkit {

template <class Payload, class Truth>
struct LabeledInstance {
  Payload problem;
  Truth ground_truth;
  /// One label per robust measurement (per loop closure for pose graphs).
  std::vector<bool> outlier_labels;
  std::uint64_t seed = 0;
};

struct LinearData {
  Eigen::MatrixXd design;
  Eigen::VectorXd observations;
};

struct RegistrationData {
  Eigen::Matrix3Xd source;
  Eigen::Matrix3Xd target;
};

struct ShapeData {
  Eigen::Matrix3Xd model;
  Eigen::Matrix2Xd image;
};

using LinearInstance = LabeledInstance<LinearData, Eigen::VectorXd>;
using RegistrationInstance = LabeledInstance<RegistrationData, RigidTransform>;
using ShapeInstance = LabeledInstance<ShapeData, WeakPerspectivePose>;
template <int D>
using PoseGraphInstance = LabeledInstance<PoseGraph<D>, Trajectory<D>>;

struct GridConfig {
  int rows = 5;
  int cols = 5;
  double noise_sigma_t = 0.0;
  double noise_sigma_r = 0.0;
  double loop_closure_prob = 1.0;
  double spacing = 1.0;
};

struct SphereConfig {
  int levels = 5;
  int points_per_level = 10;
  double noise_sigma_t = 0.0;
  double noise_sigma_r = 0.0;
  double radius = 10.0;
  double loop_closure_prob = 1.0;
};

/// Rows a_i ~ N(0, I_n), x* ~ N(0, I_n), y_i = a_i^T x* + N(0, sigma^2).
LinearInstance gen_linear(std::size_t m, std::size_t n, double noise_sigma, std::uint64_t seed);

/// Source points uniform in the unit cube centered at the origin; targets T(p) + N(0, sigma^2 I).
RegistrationInstance gen_registration(std::size_t count, const RigidTransform& transform, double noise_sigma,
                                      std::uint64_t seed);

/// Model points uniform in the unit cube; image points s Pi R B + t + N(0, sigma^2 I).
ShapeInstance gen_shape(std::size_t count, double scale, const Eigen::Matrix3d& rotation,
                        const Eigen::Vector2d& translation, double noise_sigma, std::uint64_t seed);

/// Lattice traversed row by row in alternating directions; loop closures join
/// lattice neighbours that are not consecutive along the traversal.
PoseGraphInstance<2> gen_grid_2d(const GridConfig& config, std::uint64_t seed);

/// Rings of poses stacked on a sphere, one odometry chain through all rings;
/// loop closures join vertically adjacent poses of neighbouring rings.
PoseGraphInstance<3> gen_sphere_3d(const SphereConfig& config, std::uint64_t seed);

/// Rotation uniformly distributed on SO(3).
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

struct OutlierOptions {
  /// Half-width of the box spurious loop-closure translations are drawn from.
  double translation_box = 5.0;
  /// Linear outliers shift y by +/- U(offset_min, offset_max).
  double linear_offset_min = 1.0;
  double linear_offset_max = 10.0;
};

/// Corrupts floor(rate * eligible) measurements chosen uniformly at random.
LinearInstance inject_outliers(const LinearInstance& instance, double rate, std::uint64_t seed,
                               const OutlierOptions& options = {});
RegistrationInstance inject_outliers(const RegistrationInstance& instance, double rate, std::uint64_t seed,
                                     const OutlierOptions& options = {});
ShapeInstance inject_outliers(const ShapeInstance& instance, double rate, std::uint64_t seed,
                              const OutlierOptions& options = {});
PoseGraphInstance<2> inject_outliers(const PoseGraphInstance<2>& instance, double rate, std::uint64_t seed,
                                     const OutlierOptions& options = {});
PoseGraphInstance<3> inject_outliers(const PoseGraphInstance<3>& instance, double rate, std::uint64_t seed,
                                     const OutlierOptions& options = {});

/// Splitmix64 finalizer, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

}  // namespace robustkit
