#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "robustkit/problems/pose_graph.hpp"

namespace robustkit {

using AnyPoseGraph = std::variant<PoseGraph2, PoseGraph3>;

struct G2oReadOptions {
  // Edges are odometry when their endpoint ids differ by one; these lists
  // override that rule for specific (from, to) pairs.
  std::vector<std::pair<int, int>> force_loop_closure;
  std::vector<std::pair<int, int>> force_odometry;
};

/// Parses VERTEX_SE2 / EDGE_SE2 / VERTEX_SE3:QUAT / EDGE_SE3:QUAT records.
/// Throws ParseError naming the offending line. Text without records yields an empty 2D graph.
AnyPoseGraph parse_g2o(std::string_view text, const G2oReadOptions& options = {});
AnyPoseGraph read_g2o_file(const std::string& path, const G2oReadOptions& options = {});

template <int D>
std::string write_g2o(const PoseGraph<D>& graph);
template <>
std::string write_g2o<2>(const PoseGraph2& graph);
template <>
std::string write_g2o<3>(const PoseGraph3& graph);
std::string write_g2o(const AnyPoseGraph& graph);

}  // namespace robustkit
