#include "robustkit/problems/pose_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "robustkit/core/error.hpp"
#include "robustkit/problems/lie.hpp"

namespace robustkit {
namespace {

template <int D>
using TangentVec = Eigen::Matrix<double, PoseTraits<D>::kTangent, 1>;
template <int D>
using TangentMat = Eigen::Matrix<double, PoseTraits<D>::kTangent, PoseTraits<D>::kTangent>;

template <int D>
struct Ops;

template <>
struct Ops<2> {
  static Eigen::Matrix<double, 1, 1> log(const Eigen::Matrix2d& R) {
    return Eigen::Matrix<double, 1, 1>(so2_log(R));
  }
  static Eigen::Matrix2d exp(const Eigen::Matrix<double, 1, 1>& phi) { return so2_exp(phi(0)); }
};

template <>
struct Ops<3> {
  static Eigen::Vector3d log(const Eigen::Matrix3d& R) { return so3_log(R); }
  static Eigen::Matrix3d exp(const Eigen::Vector3d& phi) { return so3_exp(phi); }
};

std::string id_str(int id) { return std::to_string(id); }

template <int D>
std::map<int, std::size_t> index_of(const PoseGraph<D>& graph) {
  std::map<int, std::size_t> idx;
  std::size_t k = 0;
  for (const auto& [id, pose] : graph.vertices) idx.emplace(id, k++);
  return idx;
}

std::size_t lookup(const std::map<int, std::size_t>& idx, int id) {
  const auto it = idx.find(id);
  if (it == idx.end()) throw Error(ErrorCode::kMissingVertex, "pose graph: edge references missing vertex " + id_str(id));
  return it->second;
}

// Jacobians of edge_error with respect to the right-perturbations
// [delta; phi] of the two endpoints (t <- t + R delta, R <- R Exp(phi)).
template <int D>
void edge_jacobians(const PoseEdge<D>& edge, const Pose<D>& a, const Pose<D>& b, const TangentVec<D>& e,
                    TangentMat<D>& Ja, TangentMat<D>& Jb) {
  constexpr int kRot = PoseTraits<D>::kRotation;
  const auto& Rm = edge.measurement.rotation;
  const Eigen::Matrix<double, D, 1> local = a.rotation.transpose() * (b.translation - a.translation);
  Ja.setZero();
  Jb.setZero();
  Ja.template topLeftCorner<D, D>() = -Rm.transpose();
  Jb.template topLeftCorner<D, D>() = Rm.transpose() * a.rotation.transpose() * b.rotation;
  if constexpr (D == 2) {
    const Eigen::Vector2d perp(-local.y(), local.x());
    Ja.template topRightCorner<D, kRot>() = -Rm.transpose() * perp;
    Ja(2, 2) = -1.0;
    Jb(2, 2) = 1.0;
  } else {
    const Eigen::Matrix3d jr_inv = so3_right_jacobian_inv(e.template tail<3>());
    Ja.template topRightCorner<3, 3>() = Rm.transpose() * hat(local);
    Ja.template bottomRightCorner<3, 3>() = -jr_inv * b.rotation.transpose() * a.rotation;
    Jb.template bottomRightCorner<3, 3>() = jr_inv;
  }
}

template <int D>
Pose<D> retract(const Pose<D>& p, const TangentVec<D>& dx) {
  constexpr int kRot = PoseTraits<D>::kRotation;
  Pose<D> out;
  out.translation = p.translation + p.rotation * dx.template head<D>();
  out.rotation = p.rotation * Ops<D>::exp(dx.template tail<kRot>());
  return out;
}

template <int D>
struct WeightedEdge {
  const PoseEdge<D>* edge;
  std::size_t a;
  std::size_t b;
  double weight;
};

template <int D>
std::vector<WeightedEdge<D>> weighted_edges(const PoseGraph<D>& graph, std::span<const double> odo_w,
                                            std::span<const double> lc_w) {
  if (odo_w.size() != graph.odometry.size() || lc_w.size() != graph.loop_closures.size()) {
    throw Error(ErrorCode::kDomain, "pose graph: weight count does not match edge count");
  }
  const auto idx = index_of(graph);
  std::vector<WeightedEdge<D>> out;
  auto add = [&](const std::vector<PoseEdge<D>>& edges, std::span<const double> w) {
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (w[k] < 0.0 || !std::isfinite(w[k])) throw Error(ErrorCode::kDomain, "pose graph: invalid weight");
      const std::size_t a = lookup(idx, edges[k].from);
      const std::size_t b = lookup(idx, edges[k].to);
      if (w[k] > 0.0) out.push_back({&edges[k], a, b, w[k]});
    }
  };
  add(graph.odometry, odo_w);
  add(graph.loop_closures, lc_w);
  return out;
}

template <int D>
double total_cost(const std::vector<WeightedEdge<D>>& edges, const Trajectory<D>& x) {
  double c = 0.0;
  for (const auto& we : edges) {
    const TangentVec<D> e = edge_error(*we.edge, x[we.a], x[we.b]);
    c += we.weight * e.dot(we.edge->information * e);
  }
  return c;
}

struct OdometryTree {
  std::vector<int> parent;        // vertex index of the parent, -1 at the root
  std::vector<int> parent_edge;   // odometry edge joining a vertex to its parent
  std::vector<int> depth;
  std::vector<int> order;         // BFS order
};

template <int D>
OdometryTree odometry_tree(const PoseGraph<D>& graph) {
  const auto idx = index_of(graph);
  const std::size_t n = graph.vertices.size();
  std::vector<std::vector<std::pair<std::size_t, int>>> adj(n);
  for (std::size_t k = 0; k < graph.odometry.size(); ++k) {
    const std::size_t a = lookup(idx, graph.odometry[k].from);
    const std::size_t b = lookup(idx, graph.odometry[k].to);
    adj[a].emplace_back(b, static_cast<int>(k));
    adj[b].emplace_back(a, static_cast<int>(k));
  }
  OdometryTree tree;
  tree.parent.assign(n, -1);
  tree.parent_edge.assign(n, -1);
  tree.depth.assign(n, -1);
  if (n == 0) return tree;
  std::queue<std::size_t> queue;
  queue.push(0);
  tree.depth[0] = 0;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop();
    tree.order.push_back(static_cast<int>(v));
    for (const auto& [u, k] : adj[v]) {
      if (tree.depth[u] >= 0) continue;
      tree.depth[u] = tree.depth[v] + 1;
      tree.parent[u] = static_cast<int>(v);
      tree.parent_edge[u] = k;
      queue.push(u);
    }
  }
  if (tree.order.size() != n) {
    throw Error(ErrorCode::kDisconnectedOdometry, "pose graph: odometry does not connect every vertex");
  }
  return tree;
}

// Odometry edges on the tree path between vertex indices a and b.
std::vector<int> tree_path(const OdometryTree& tree, std::size_t a, std::size_t b) {
  std::vector<int> up_a;
  std::vector<int> up_b;
  auto ia = static_cast<int>(a);
  auto ib = static_cast<int>(b);
  while (tree.depth[static_cast<std::size_t>(ia)] > tree.depth[static_cast<std::size_t>(ib)]) {
    up_a.push_back(tree.parent_edge[static_cast<std::size_t>(ia)]);
    ia = tree.parent[static_cast<std::size_t>(ia)];
  }
  while (tree.depth[static_cast<std::size_t>(ib)] > tree.depth[static_cast<std::size_t>(ia)]) {
    up_b.push_back(tree.parent_edge[static_cast<std::size_t>(ib)]);
    ib = tree.parent[static_cast<std::size_t>(ib)];
  }
  while (ia != ib) {
    up_a.push_back(tree.parent_edge[static_cast<std::size_t>(ia)]);
    up_b.push_back(tree.parent_edge[static_cast<std::size_t>(ib)]);
    ia = tree.parent[static_cast<std::size_t>(ia)];
    ib = tree.parent[static_cast<std::size_t>(ib)];
  }
  up_a.insert(up_a.end(), up_b.rbegin(), up_b.rend());
  return up_a;
}

}  // namespace

template <int D>
Trajectory<D> vertex_poses(const PoseGraph<D>& graph) {
  Trajectory<D> out;
  out.reserve(graph.vertices.size());
  for (const auto& [id, pose] : graph.vertices) out.push_back(pose);
  return out;
}

template <int D>
Eigen::Matrix<double, PoseTraits<D>::kTangent, 1> edge_error(const PoseEdge<D>& edge, const Pose<D>& a,
                                                              const Pose<D>& b) {
  constexpr int kRot = PoseTraits<D>::kRotation;
  const auto& Rm = edge.measurement.rotation;
  TangentVec<D> e;
  e.template head<D>() =
      Rm.transpose() * (a.rotation.transpose() * (b.translation - a.translation) - edge.measurement.translation);
  e.template tail<kRot>() = Ops<D>::log(Rm.transpose() * a.rotation.transpose() * b.rotation);
  return e;
}

template <int D>
double edge_residual(const PoseEdge<D>& edge, const Pose<D>& a, const Pose<D>& b) {
  const TangentVec<D> e = edge_error(edge, a, b);
  return std::sqrt(std::max(0.0, e.dot(edge.information * e)));
}

template <int D>
double pgo_residual(const PoseEdge<D>& edge, const std::map<int, Pose<D>>& poses) {
  const auto a = poses.find(edge.from);
  const auto b = poses.find(edge.to);
  if (a == poses.end()) throw Error(ErrorCode::kMissingVertex, "pgo_residual: missing vertex " + id_str(edge.from));
  if (b == poses.end()) throw Error(ErrorCode::kMissingVertex, "pgo_residual: missing vertex " + id_str(edge.to));
  return edge_residual(edge, a->second, b->second);
}

template <int D>
Trajectory<D> odometry_initialization(const PoseGraph<D>& graph) {
  const OdometryTree tree = odometry_tree(graph);
  const auto idx = index_of(graph);
  Trajectory<D> out = vertex_poses(graph);
  for (std::size_t k = 1; k < tree.order.size(); ++k) {
    const auto v = static_cast<std::size_t>(tree.order[k]);
    const auto p = static_cast<std::size_t>(tree.parent[v]);
    const auto& edge = graph.odometry[static_cast<std::size_t>(tree.parent_edge[v])];
    if (lookup(idx, edge.from) == p) {
      out[v] = out[p] * edge.measurement;
    } else {
      out[v] = out[p] * edge.measurement.inverse();
    }
  }
  return out;
}

template <int D>
double pgo_cost(const PoseGraph<D>& graph, std::span<const double> odometry_weights,
                std::span<const double> loop_closure_weights, const Trajectory<D>& poses) {
  if (poses.size() != graph.vertices.size()) throw Error(ErrorCode::kDomain, "pgo_cost: pose count mismatch");
  return total_cost(weighted_edges(graph, odometry_weights, loop_closure_weights), poses);
}

template <int D>
PgoSolution<D> pgo_weighted_solve(const PoseGraph<D>& graph, std::span<const double> odometry_weights,
                                  std::span<const double> loop_closure_weights, const Trajectory<D>& init,
                                  const PgoOptions& options) {
  constexpr int T = PoseTraits<D>::kTangent;
  if (init.size() != graph.vertices.size()) throw Error(ErrorCode::kDomain, "pgo: initial pose count mismatch");
  const auto edges = weighted_edges(graph, odometry_weights, loop_closure_weights);

  PgoSolution<D> sol;
  sol.poses = init;
  sol.cost = total_cost(edges, sol.poses);
  const std::size_t n = init.size();
  if (n <= 1) {
    sol.converged = true;
    return sol;
  }
  const auto dim = static_cast<Eigen::Index>((n - 1) * T);
  // Vertex 0 (smallest id) is the gauge anchor and has no variables.
  auto offset = [](std::size_t v) { return static_cast<Eigen::Index>((v - 1) * T); };

  double lambda = options.lambda_init;
  for (int it = 0; it < options.max_iterations; ++it) {
    sol.iterations = it + 1;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edges.size() * 4 * T * T);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (const auto& we : edges) {
      const TangentVec<D> e = edge_error(*we.edge, sol.poses[we.a], sol.poses[we.b]);
      TangentMat<D> Ja;
      TangentMat<D> Jb;
      edge_jacobians(*we.edge, sol.poses[we.a], sol.poses[we.b], e, Ja, Jb);
      const TangentMat<D> W = we.weight * we.edge->information;
      const std::size_t verts[2] = {we.a, we.b};
      const TangentMat<D>* jac[2] = {&Ja, &Jb};
      for (int p = 0; p < 2; ++p) {
        if (verts[p] == 0) continue;
        g.segment<T>(offset(verts[p])) += jac[p]->transpose() * W * e;
        for (int q = 0; q < 2; ++q) {
          if (verts[q] == 0) continue;
          const TangentMat<D> block = jac[p]->transpose() * W * *jac[q];
          for (int r = 0; r < T; ++r) {
            for (int c = 0; c < T; ++c) {
              triplets.emplace_back(offset(verts[p]) + r, offset(verts[q]) + c, block(r, c));
            }
          }
        }
      }
    }
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SparseMatrix<double> I(dim, dim);
    I.setIdentity();

    bool accepted = false;
    bool small_step = false;
    while (lambda <= options.lambda_max) {
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H + lambda * I);
      if (ldlt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd dx = ldlt.solve(-g);
      if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      small_step = dx.norm() < options.step_tolerance;
      Trajectory<D> trial = sol.poses;
      for (std::size_t v = 1; v < n; ++v) {
        trial[v] = retract<D>(sol.poses[v], dx.segment<T>(offset(v)));
      }
      const double trial_cost = total_cost(edges, trial);
      if (trial_cost < sol.cost) {
        sol.poses = std::move(trial);
        sol.cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      if (small_step) break;
      lambda *= 10.0;
    }
    if (small_step) {
      sol.converged = true;
      break;
    }
    if (!accepted) {
      sol.singular = true;
      break;
    }
  }
  return sol;
}

template <int D>
std::vector<double> loop_multiplicities(const PoseGraph<D>& graph) {
  const OdometryTree tree = odometry_tree(graph);
  const auto idx = index_of(graph);
  std::vector<double> count(graph.odometry.size(), 0.0);
  for (const auto& lc : graph.loop_closures) {
    for (int k : tree_path(tree, lookup(idx, lc.from), lookup(idx, lc.to))) count[static_cast<std::size_t>(k)] += 1.0;
  }
  for (double& c : count) {
    if (c == 0.0) c = kNoLoop;
  }
  return count;
}

template <int D>
CycleBounds cycle_bounds(const PoseGraph<D>& graph, const PgoOptions& options) {
  CycleBounds out;
  out.multiplicities = loop_multiplicities(graph);
  const OdometryTree tree = odometry_tree(graph);
  const auto idx = index_of(graph);
  const Trajectory<D> init = odometry_initialization(graph);
  std::vector<int> ids;
  for (const auto& [id, pose] : graph.vertices) ids.push_back(id);

  out.bounds.reserve(graph.loop_closures.size());
  for (const auto& lc : graph.loop_closures) {
    const std::vector<int> path = tree_path(tree, lookup(idx, lc.from), lookup(idx, lc.to));
    PoseGraph<D> cycle;
    std::vector<double> odo_w;
    auto add_vertex = [&](int id) { cycle.vertices.emplace(id, init[lookup(idx, id)]); };
    add_vertex(lc.from);
    add_vertex(lc.to);
    for (int k : path) {
      const auto& edge = graph.odometry[static_cast<std::size_t>(k)];
      add_vertex(edge.from);
      add_vertex(edge.to);
      cycle.odometry.push_back(edge);
      odo_w.push_back(1.0 / out.multiplicities[static_cast<std::size_t>(k)]);
    }
    cycle.loop_closures.push_back(lc);
    const std::vector<double> lc_w{1.0};
    const Trajectory<D> start = odometry_initialization(cycle);
    out.bounds.push_back(pgo_weighted_solve(cycle, odo_w, lc_w, start, options).cost);
  }
  return out;
}

template <int D>
PoseGraphProblem<D>::PoseGraphProblem(PoseGraph<D> graph, PgoOptions options)
    : graph_(std::move(graph)), options_(options) {
  const auto idx = index_of(graph_);
  for (const auto& lc : graph_.loop_closures) lc_index_.emplace_back(lookup(idx, lc.from), lookup(idx, lc.to));
  init_ = odometry_initialization(graph_);
}

template <int D>
std::vector<double> PoseGraphProblem<D>::residuals(const Estimate& x) const {
  if (x.size() != graph_.vertices.size()) throw Error(ErrorCode::kDomain, "pgo: pose count mismatch");
  std::vector<double> r(size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = edge_residual(graph_.loop_closures[k], x[lc_index_[k].first], x[lc_index_[k].second]);
  }
  return r;
}

template <int D>
typename PoseGraphProblem<D>::Estimate PoseGraphProblem<D>::weighted_solve(std::span<const double> weights) const {
  const std::vector<double> odo_w(graph_.odometry.size(), 1.0);
  return pgo_weighted_solve(graph_, odo_w, weights, init_, options_).poses;
}

#define ROBUSTKIT_INSTANTIATE_PGO(D)                                                                       \
  template Trajectory<D> vertex_poses<D>(const PoseGraph<D>&);                                           \
  template Eigen::Matrix<double, PoseTraits<D>::kTangent, 1> edge_error<D>(const PoseEdge<D>&,             \
                                                                            const Pose<D>&, const Pose<D>&); \
  template double edge_residual<D>(const PoseEdge<D>&, const Pose<D>&, const Pose<D>&);                  \
  template double pgo_residual<D>(const PoseEdge<D>&, const std::map<int, Pose<D>>&);                    \
  template Trajectory<D> odometry_initialization<D>(const PoseGraph<D>&);                                \
  template double pgo_cost<D>(const PoseGraph<D>&, std::span<const double>, std::span<const double>,     \
                              const Trajectory<D>&);                                                     \
  template PgoSolution<D> pgo_weighted_solve<D>(const PoseGraph<D>&, std::span<const double>,            \
                                                std::span<const double>, const Trajectory<D>&,           \
                                                const PgoOptions&);                                      \
  template std::vector<double> loop_multiplicities<D>(const PoseGraph<D>&);                              \
  template CycleBounds cycle_bounds<D>(const PoseGraph<D>&, const PgoOptions&);                          \
  template class PoseGraphProblem<D>;

ROBUSTKIT_INSTANTIATE_PGO(2)
ROBUSTKIT_INSTANTIATE_PGO(3)

#undef ROBUSTKIT_INSTANTIATE_PGO

}  // namespace robustkit
