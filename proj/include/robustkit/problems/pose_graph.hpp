#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace robustkit {

template <int D>
struct PoseTraits;
template <>
struct PoseTraits<2> {
  static constexpr int kTangent = 3;
  static constexpr int kRotation = 1;
};
template <>
struct PoseTraits<3> {
  static constexpr int kTangent = 6;
  static constexpr int kRotation = 3;
};

template <int D>
struct Pose {
  using Rotation = Eigen::Matrix<double, D, D>;
  using Translation = Eigen::Matrix<double, D, 1>;

  Rotation rotation = Rotation::Identity();
  Translation translation = Translation::Zero();

  Pose operator*(const Pose& o) const { return {rotation * o.rotation, rotation * o.translation + translation}; }
  Pose inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
};

using Pose2 = Pose<2>;
using Pose3 = Pose<3>;

template <int D>
using Information = Eigen::Matrix<double, PoseTraits<D>::kTangent, PoseTraits<D>::kTangent>;

// Relative-pose measurement of `to` in the frame of `from`. The information
// matrix follows g2o ordering: translation block first, then rotation.
template <int D>
struct PoseEdge {
  int from = 0;
  int to = 0;
  Pose<D> measurement;
  Information<D> information = Information<D>::Identity();
};

template <int D>
struct PoseGraph {
  std::map<int, Pose<D>> vertices;
  std::vector<PoseEdge<D>> odometry;
  std::vector<PoseEdge<D>> loop_closures;
};

using PoseGraph2 = PoseGraph<2>;
using PoseGraph3 = PoseGraph<3>;

/// Poses listed in ascending vertex-id order, the layout used by every solver here.
template <int D>
using Trajectory = std::vector<Pose<D>>;

template <int D>
Trajectory<D> vertex_poses(const PoseGraph<D>& graph);

/// Tangent-space error [translation; rotation] of an edge between poses a and b.
template <int D>
Eigen::Matrix<double, PoseTraits<D>::kTangent, 1> edge_error(const PoseEdge<D>& edge, const Pose<D>& a,
                                                              const Pose<D>& b);

/// sqrt(e^T Omega e) for an edge between poses a and b.
template <int D>
double edge_residual(const PoseEdge<D>& edge, const Pose<D>& a, const Pose<D>& b);

/// Residual of an edge against poses looked up by vertex id. Throws MissingVertex.
template <int D>
double pgo_residual(const PoseEdge<D>& edge, const std::map<int, Pose<D>>& poses);

struct PgoOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-8;
  double lambda_init = 1e-6;
  double lambda_max = 1e6;
};

template <int D>
struct PgoSolution {
  Trajectory<D> poses;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Damping exceeded lambda_max before a step could be taken.
  bool singular = false;
};

/// Composes odometry outward from the smallest vertex id, which keeps its stored pose.
/// Throws DisconnectedOdometry if some vertex is unreachable.
template <int D>
Trajectory<D> odometry_initialization(const PoseGraph<D>& graph);

/// Levenberg-damped Gauss-Newton on sum_e w_e r_e^2 over the pose manifold with the
/// smallest-id vertex held fixed at its initial value.
template <int D>
PgoSolution<D> pgo_weighted_solve(const PoseGraph<D>& graph, std::span<const double> odometry_weights,
                                  std::span<const double> loop_closure_weights, const Trajectory<D>& init,
                                  const PgoOptions& options = {});

/// sum_e w_e r_e^2 at the given poses.
template <int D>
double pgo_cost(const PoseGraph<D>& graph, std::span<const double> odometry_weights,
                std::span<const double> loop_closure_weights, const Trajectory<D>& poses);

inline constexpr double kNoLoop = std::numeric_limits<double>::infinity();

/// Per odometry edge, the number of loop-closure cycles through it (kNoLoop if none).
template <int D>
std::vector<double> loop_multiplicities(const PoseGraph<D>& graph);

struct CycleBounds {
  std::vector<double> bounds;          // b_k per loop closure
  std::vector<double> multiplicities;  // n_ij per odometry edge
};

/// Single-cycle optimal costs b_k, odometry edges on each cycle down-weighted by 1/n_ij.
template <int D>
CycleBounds cycle_bounds(const PoseGraph<D>& graph, const PgoOptions& options = {});

// Pose-graph optimization as a robust-estimation problem: the measurements are
// the loop closures; odometry always keeps unit weight.
template <int D>
class PoseGraphProblem {
 public:
  using Estimate = Trajectory<D>;

  explicit PoseGraphProblem(PoseGraph<D> graph, PgoOptions options = {});

  std::size_t size() const { return graph_.loop_closures.size(); }
  int residual_dof() const { return PoseTraits<D>::kTangent; }
  std::size_t minimal_support() const { return 0; }

  std::vector<double> residuals(const Estimate& x) const;
  Estimate weighted_solve(std::span<const double> weights) const;

  const PoseGraph<D>& graph() const { return graph_; }
  const Trajectory<D>& initialization() const { return init_; }

 private:
  PoseGraph<D> graph_;
  PgoOptions options_;
  Trajectory<D> init_;
  std::vector<std::pair<std::size_t, std::size_t>> lc_index_;
};

}  // namespace robustkit
