#include "robustkit/io/g2o.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "robustkit/core/error.hpp"
#include "robustkit/problems/lie.hpp"

namespace robustkit {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double to_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "not a number: '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(line, "non-finite number: '" + std::string(s) + "'");
  return v;
}

int to_int(std::string_view s, std::size_t line) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "not an integer id: '" + std::string(s) + "'");
  }
  return v;
}

template <int N>
Eigen::Matrix<double, N, N> upper_triangular(const std::vector<std::string_view>& f, std::size_t first,
                                             std::size_t line) {
  Eigen::Matrix<double, N, N> m;
  std::size_t k = first;
  for (int r = 0; r < N; ++r) {
    for (int c = r; c < N; ++c) {
      m(r, c) = to_double(f[k++], line);
      m(c, r) = m(r, c);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -1e-9) throw ParseError(line, "information matrix is not positive semidefinite");
  return m;
}

Eigen::Matrix3d parse_quaternion(const std::vector<std::string_view>& f, std::size_t first, std::size_t line) {
  const double qx = to_double(f[first], line);
  const double qy = to_double(f[first + 1], line);
  const double qz = to_double(f[first + 2], line);
  const double qw = to_double(f[first + 3], line);
  const double norm = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
  if (std::abs(norm - 1.0) > 1e-3) throw ParseError(line, "quaternion is not unit length");
  return quaternion_to_rotation(qx, qy, qz, qw);
}

void expect_fields(const std::vector<std::string_view>& f, std::size_t count, std::size_t line) {
  if (f.size() != count) {
    throw ParseError(line, std::string(f[0]) + " expects " + std::to_string(count - 1) + " fields, got " +
                               std::to_string(f.size() - 1));
  }
}

struct EdgeRecord {
  std::size_t line;
  bool odometry;
};

// Union-find over vertex ids to reject odometry cycles.
class Forest {
 public:
  int find(int v) {
    auto it = parent_.find(v);
    if (it == parent_.end()) {
      parent_.emplace(v, v);
      return v;
    }
    if (it->second == v) return v;
    const int root = find(it->second);
    parent_[v] = root;
    return root;
  }
  bool unite(int a, int b) {
    const int ra = find(a);
    const int rb = find(b);
    if (ra == rb) return false;
    parent_[ra] = rb;
    return true;
  }

 private:
  std::map<int, int> parent_;
};

template <int D>
void finish(PoseGraph<D>& g, const std::vector<std::pair<EdgeRecord, PoseEdge<D>>>& edges) {
  Forest forest;
  for (const auto& [rec, edge] : edges) {
    if (!g.vertices.count(edge.from)) throw ParseError(rec.line, "edge references missing vertex " + std::to_string(edge.from));
    if (!g.vertices.count(edge.to)) throw ParseError(rec.line, "edge references missing vertex " + std::to_string(edge.to));
    if (rec.odometry) {
      if (!forest.unite(edge.from, edge.to)) throw ParseError(rec.line, "odometry edges form a cycle");
      g.odometry.push_back(edge);
    } else {
      g.loop_closures.push_back(edge);
    }
  }
}

void append(std::string& out, const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  out += buf;
}

void num(std::string& out, double v) {
  out += ' ';
  append(out, "%.17g", v);
}

}  // namespace

AnyPoseGraph parse_g2o(std::string_view text, const G2oReadOptions& options) {
  auto has_pair = [](const std::vector<std::pair<int, int>>& list, int a, int b) {
    return std::find(list.begin(), list.end(), std::make_pair(a, b)) != list.end();
  };
  auto is_odometry = [&](int a, int b) {
    if (has_pair(options.force_loop_closure, a, b)) return false;
    if (has_pair(options.force_odometry, a, b)) return true;
    return std::abs(a - b) == 1;
  };

  std::optional<int> dim;
  PoseGraph2 g2;
  PoseGraph3 g3;
  std::vector<std::pair<EdgeRecord, PoseEdge<2>>> e2;
  std::vector<std::pair<EdgeRecord, PoseEdge<3>>> e3;
  auto set_dim = [&](int d, std::size_t line) {
    if (dim && *dim != d) throw ParseError(line, "mixes SE2 and SE3 records");
    dim = d;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto f = split_fields(line);
    if (f.empty() || f[0].front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const std::string_view tag = f[0];
    if (tag == "VERTEX_SE2") {
      set_dim(2, line_no);
      expect_fields(f, 5, line_no);
      const int id = to_int(f[1], line_no);
      Pose2 p;
      p.translation = {to_double(f[2], line_no), to_double(f[3], line_no)};
      p.rotation = so2_exp(to_double(f[4], line_no));
      if (!g2.vertices.emplace(id, p).second) throw ParseError(line_no, "duplicate vertex id " + std::to_string(id));
    } else if (tag == "EDGE_SE2") {
      set_dim(2, line_no);
      expect_fields(f, 12, line_no);
      PoseEdge<2> e;
      e.from = to_int(f[1], line_no);
      e.to = to_int(f[2], line_no);
      e.measurement.translation = {to_double(f[3], line_no), to_double(f[4], line_no)};
      e.measurement.rotation = so2_exp(to_double(f[5], line_no));
      e.information = upper_triangular<3>(f, 6, line_no);
      e2.push_back({{line_no, is_odometry(e.from, e.to)}, e});
    } else if (tag == "VERTEX_SE3:QUAT") {
      set_dim(3, line_no);
      expect_fields(f, 9, line_no);
      const int id = to_int(f[1], line_no);
      Pose3 p;
      p.translation = {to_double(f[2], line_no), to_double(f[3], line_no), to_double(f[4], line_no)};
      p.rotation = parse_quaternion(f, 5, line_no);
      if (!g3.vertices.emplace(id, p).second) throw ParseError(line_no, "duplicate vertex id " + std::to_string(id));
    } else if (tag == "EDGE_SE3:QUAT") {
      set_dim(3, line_no);
      expect_fields(f, 31, line_no);
      PoseEdge<3> e;
      e.from = to_int(f[1], line_no);
      e.to = to_int(f[2], line_no);
      e.measurement.translation = {to_double(f[3], line_no), to_double(f[4], line_no), to_double(f[5], line_no)};
      e.measurement.rotation = parse_quaternion(f, 6, line_no);
      e.information = upper_triangular<6>(f, 10, line_no);
      e3.push_back({{line_no, is_odometry(e.from, e.to)}, e});
    } else {
      throw ParseError(line_no, "unknown record type '" + std::string(tag) + "'");
    }
    if (end == text.size()) break;
  }

  if (dim.value_or(2) == 3) {
    finish(g3, e3);
    return g3;
  }
  finish(g2, e2);
  return g2;
}

AnyPoseGraph read_g2o_file(const std::string& path, const G2oReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_g2o(ss.str(), options);
}

template <>
std::string write_g2o<2>(const PoseGraph2& graph) {
  std::string out;
  for (const auto& [id, p] : graph.vertices) {
    out += "VERTEX_SE2 " + std::to_string(id);
    num(out, p.translation.x());
    num(out, p.translation.y());
    num(out, so2_log(p.rotation));
    out += '\n';
  }
  auto edges = [&](const std::vector<PoseEdge<2>>& list) {
    for (const auto& e : list) {
      out += "EDGE_SE2 " + std::to_string(e.from) + ' ' + std::to_string(e.to);
      num(out, e.measurement.translation.x());
      num(out, e.measurement.translation.y());
      num(out, so2_log(e.measurement.rotation));
      for (int r = 0; r < 3; ++r) {
        for (int c = r; c < 3; ++c) num(out, e.information(r, c));
      }
      out += '\n';
    }
  };
  edges(graph.odometry);
  edges(graph.loop_closures);
  return out;
}

template <>
std::string write_g2o<3>(const PoseGraph3& graph) {
  std::string out;
  auto quat = [&](const Eigen::Matrix3d& R) {
    Eigen::Quaterniond q(R);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    num(out, q.x());
    num(out, q.y());
    num(out, q.z());
    num(out, q.w());
  };
  for (const auto& [id, p] : graph.vertices) {
    out += "VERTEX_SE3:QUAT " + std::to_string(id);
    for (int k = 0; k < 3; ++k) num(out, p.translation(k));
    quat(p.rotation);
    out += '\n';
  }
  auto edges = [&](const std::vector<PoseEdge<3>>& list) {
    for (const auto& e : list) {
      out += "EDGE_SE3:QUAT " + std::to_string(e.from) + ' ' + std::to_string(e.to);
      for (int k = 0; k < 3; ++k) num(out, e.measurement.translation(k));
      quat(e.measurement.rotation);
      for (int r = 0; r < 6; ++r) {
        for (int c = r; c < 6; ++c) num(out, e.information(r, c));
      }
      out += '\n';
    }
  };
  edges(graph.odometry);
  edges(graph.loop_closures);
  return out;
}

std::string write_g2o(const AnyPoseGraph& graph) {
  return std::visit([](const auto& g) { return write_g2o(g); }, graph);
}

}  // namespace robustkit
