#include "robustkit/io/generators.hpp"

#include <cmath>
#include <numbers>

#include "robustkit/core/error.hpp"
#include "robustkit/problems/lie.hpp"

namespace robustkit {
namespace {

constexpr int kGeometryAttempts = 10;

double normal(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

double info_weight(double sigma) { return sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0; }

bool full_spread(const Eigen::Matrix3Xd& pts, int min_rank) {
  const Eigen::Vector3d mean = pts.rowwise().mean();
  const Eigen::Matrix3Xd c = pts.colwise() - mean;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c * c.transpose(), Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues()(2);
  return top > 0.0 && es.eigenvalues()(3 - min_rank) > 1e-9 * top;
}

Eigen::Matrix3Xd unit_cube_points(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    for (int k = 0; k < 3; ++k) pts(k, i) = u(rng);
  }
  return pts;
}

std::vector<std::size_t> choose(std::size_t n, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kRateOutOfRange, "inject_outliers: rate must lie in [0, 1)");
  }
  const auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

// Index of another measurement, uniformly among the n-1 others.
std::size_t other_index(std::size_t i, std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 2);
  const std::size_t j = pick(rng);
  return j >= i ? j + 1 : j;
}

template <int D>
Pose<D> random_pose(std::mt19937_64& rng, double box) {
  std::uniform_real_distribution<double> u(-box, box);
  Pose<D> p;
  for (int k = 0; k < D; ++k) p.translation(k) = u(rng);
  if constexpr (D == 2) {
    p.rotation = so2_exp(std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng));
  } else {
    p.rotation = random_rotation(rng);
  }
  return p;
}

template <int D>
PoseGraphInstance<D> corrupt_loop_closures(const PoseGraphInstance<D>& instance, double rate, std::uint64_t seed,
                                           const OutlierOptions& options) {
  std::mt19937_64 rng(seed);
  PoseGraphInstance<D> out = instance;
  for (std::size_t k : choose(out.problem.loop_closures.size(), rate, rng)) {
    out.problem.loop_closures[k].measurement = random_pose<D>(rng, options.translation_box);
    out.outlier_labels[k] = true;
  }
  return out;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ b);
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
  } while (q.norm() < 1e-12);
  return q.normalized().toRotationMatrix();
}

LinearInstance gen_linear(std::size_t m, std::size_t n, double noise_sigma, std::uint64_t seed) {
  if (n == 0 || m < n) throw Error(ErrorCode::kDomain, "gen_linear: need m >= n >= 1");
  if (noise_sigma < 0.0) throw Error(ErrorCode::kDomain, "gen_linear: negative noise");
  for (int attempt = 0; attempt < kGeometryAttempts; ++attempt) {
    std::mt19937_64 rng(attempt == 0 ? seed : derive_seed(seed, 0xD15EA5E, static_cast<std::uint64_t>(attempt)));
    std::normal_distribution<double> g(0.0, 1.0);
    LinearInstance inst;
    inst.seed = seed;
    inst.ground_truth.resize(static_cast<Eigen::Index>(n));
    for (auto& v : inst.ground_truth) v = g(rng);
    inst.problem.design.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < inst.problem.design.rows(); ++i) {
      for (Eigen::Index j = 0; j < inst.problem.design.cols(); ++j) inst.problem.design(i, j) = g(rng);
    }
    inst.problem.observations = inst.problem.design * inst.ground_truth;
    for (auto& y : inst.problem.observations) y += normal(rng, noise_sigma);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(inst.problem.design);
    if (qr.rank() < static_cast<Eigen::Index>(n)) continue;
    inst.outlier_labels.assign(m, false);
    return inst;
  }
  throw Error(ErrorCode::kDegenerateGeometry, "gen_linear: could not draw a full-rank design");
}

RegistrationInstance gen_registration(std::size_t count, const RigidTransform& transform, double noise_sigma,
                                      std::uint64_t seed) {
  if (noise_sigma < 0.0) throw Error(ErrorCode::kDomain, "gen_registration: negative noise");
  for (int attempt = 0; attempt < kGeometryAttempts; ++attempt) {
    std::mt19937_64 rng(attempt == 0 ? seed : derive_seed(seed, 0xD15EA5E, static_cast<std::uint64_t>(attempt)));
    RegistrationInstance inst;
    inst.seed = seed;
    inst.ground_truth = transform;
    inst.problem.source = unit_cube_points(count, rng);
    if (count < 3 || !full_spread(inst.problem.source, 2)) continue;
    inst.problem.target.resize(3, inst.problem.source.cols());
    for (Eigen::Index i = 0; i < inst.problem.source.cols(); ++i) {
      Eigen::Vector3d q = transform * Eigen::Vector3d(inst.problem.source.col(i));
      for (int k = 0; k < 3; ++k) q(k) += normal(rng, noise_sigma);
      inst.problem.target.col(i) = q;
    }
    inst.outlier_labels.assign(count, false);
    return inst;
  }
  throw Error(ErrorCode::kDegenerateGeometry, "gen_registration: source points are degenerate");
}

ShapeInstance gen_shape(std::size_t count, double scale, const Eigen::Matrix3d& rotation,
                        const Eigen::Vector2d& translation, double noise_sigma, std::uint64_t seed) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kDomain, "gen_shape: scale must be positive");
  if (noise_sigma < 0.0) throw Error(ErrorCode::kDomain, "gen_shape: negative noise");
  for (int attempt = 0; attempt < kGeometryAttempts; ++attempt) {
    std::mt19937_64 rng(attempt == 0 ? seed : derive_seed(seed, 0xD15EA5E, static_cast<std::uint64_t>(attempt)));
    ShapeInstance inst;
    inst.seed = seed;
    inst.ground_truth.scale = scale;
    inst.ground_truth.rotation = rotation;
    inst.ground_truth.translation = translation;
    inst.problem.model = unit_cube_points(count, rng);
    if (count < 4 || !full_spread(inst.problem.model, 3)) continue;
    inst.problem.image.resize(2, inst.problem.model.cols());
    for (Eigen::Index i = 0; i < inst.problem.model.cols(); ++i) {
      Eigen::Vector2d z = inst.ground_truth.project(inst.problem.model.col(i));
      for (int k = 0; k < 2; ++k) z(k) += normal(rng, noise_sigma);
      inst.problem.image.col(i) = z;
    }
    inst.outlier_labels.assign(count, false);
    return inst;
  }
  throw Error(ErrorCode::kDegenerateGeometry, "gen_shape: model points are degenerate");
}

PoseGraphInstance<2> gen_grid_2d(const GridConfig& config, std::uint64_t seed) {
  if (config.rows < 2 || config.cols < 2) throw Error(ErrorCode::kDomain, "gen_grid_2d: rows and cols must be >= 2");
  if (config.noise_sigma_t < 0.0 || config.noise_sigma_r < 0.0) throw Error(ErrorCode::kDomain, "gen_grid_2d: negative noise");
  if (!(config.loop_closure_prob >= 0.0 && config.loop_closure_prob <= 1.0)) {
    throw Error(ErrorCode::kDomain, "gen_grid_2d: loop_closure_prob must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  const int rows = config.rows;
  const int cols = config.cols;
  const int n = rows * cols;
  auto index = [cols](int r, int c) { return r * cols + (r % 2 == 0 ? c : cols - 1 - c); };

  PoseGraphInstance<2> inst;
  inst.seed = seed;
  std::vector<Eigen::Vector2d> pos(static_cast<std::size_t>(n));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) pos[static_cast<std::size_t>(index(r, c))] = {c * config.spacing, r * config.spacing};
  }
  inst.ground_truth.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const Eigen::Vector2d dir = k + 1 < n ? Eigen::Vector2d(pos[uk + 1] - pos[uk]) : Eigen::Vector2d(pos[uk] - pos[uk - 1]);
    inst.ground_truth[uk].translation = pos[uk];
    inst.ground_truth[uk].rotation = so2_exp(std::atan2(dir.y(), dir.x()));
    inst.problem.vertices.emplace(k, inst.ground_truth[uk]);
  }

  Information<2> info = Information<2>::Zero();
  info(0, 0) = info(1, 1) = info_weight(config.noise_sigma_t);
  info(2, 2) = info_weight(config.noise_sigma_r);
  auto measure = [&](int a, int b) {
    PoseEdge<2> e;
    e.from = a;
    e.to = b;
    e.measurement = inst.ground_truth[static_cast<std::size_t>(a)].inverse() * inst.ground_truth[static_cast<std::size_t>(b)];
    e.measurement.translation.x() += normal(rng, config.noise_sigma_t);
    e.measurement.translation.y() += normal(rng, config.noise_sigma_t);
    e.measurement.rotation = e.measurement.rotation * so2_exp(normal(rng, config.noise_sigma_r));
    e.information = info;
    return e;
  };
  for (int k = 0; k + 1 < n; ++k) inst.problem.odometry.push_back(measure(k, k + 1));

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < n; ++k) {
    const int r = k / cols;
    const int c = r % 2 == 0 ? k % cols : cols - 1 - k % cols;
    const int neighbours[2][2] = {{r, c + 1}, {r + 1, c}};
    for (const auto& nb : neighbours) {
      if (nb[0] >= rows || nb[1] >= cols) continue;
      const int q = index(nb[0], nb[1]);
      if (std::abs(q - k) == 1) continue;
      if (u(rng) >= config.loop_closure_prob) continue;
      inst.problem.loop_closures.push_back(measure(std::min(k, q), std::max(k, q)));
    }
  }
  inst.outlier_labels.assign(inst.problem.loop_closures.size(), false);
  return inst;
}

PoseGraphInstance<3> gen_sphere_3d(const SphereConfig& config, std::uint64_t seed) {
  if (config.levels < 1 || config.points_per_level < 2) {
    throw Error(ErrorCode::kDomain, "gen_sphere_3d: need levels >= 1 and points_per_level >= 2");
  }
  if (config.noise_sigma_t < 0.0 || config.noise_sigma_r < 0.0) throw Error(ErrorCode::kDomain, "gen_sphere_3d: negative noise");
  if (!(config.loop_closure_prob >= 0.0 && config.loop_closure_prob <= 1.0)) {
    throw Error(ErrorCode::kDomain, "gen_sphere_3d: loop_closure_prob must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  const int levels = config.levels;
  const int per = config.points_per_level;
  const int n = levels * per;

  PoseGraphInstance<3> inst;
  inst.seed = seed;
  inst.ground_truth.resize(static_cast<std::size_t>(n));
  for (int l = 0; l < levels; ++l) {
    const double elevation = -std::numbers::pi / 2.0 + std::numbers::pi * (l + 1) / (levels + 1);
    for (int k = 0; k < per; ++k) {
      const double azimuth = 2.0 * std::numbers::pi * k / per;
      auto& p = inst.ground_truth[static_cast<std::size_t>(l * per + k)];
      p.translation = config.radius * Eigen::Vector3d(std::cos(elevation) * std::cos(azimuth),
                                                      std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
      // Heading along the ring, pitched with the local slope of the sphere.
      p.rotation = (Eigen::AngleAxisd(azimuth + std::numbers::pi / 2.0, Eigen::Vector3d::UnitZ()) *
                    Eigen::AngleAxisd(elevation, Eigen::Vector3d::UnitX()))
                       .toRotationMatrix();
      inst.problem.vertices.emplace(l * per + k, p);
    }
  }

  Information<3> info = Information<3>::Zero();
  info.topLeftCorner<3, 3>().diagonal().setConstant(info_weight(config.noise_sigma_t));
  info.bottomRightCorner<3, 3>().diagonal().setConstant(info_weight(config.noise_sigma_r));
  auto measure = [&](int a, int b) {
    PoseEdge<3> e;
    e.from = a;
    e.to = b;
    e.measurement = inst.ground_truth[static_cast<std::size_t>(a)].inverse() * inst.ground_truth[static_cast<std::size_t>(b)];
    for (int k = 0; k < 3; ++k) e.measurement.translation(k) += normal(rng, config.noise_sigma_t);
    Eigen::Vector3d w;
    for (int k = 0; k < 3; ++k) w(k) = normal(rng, config.noise_sigma_r);
    e.measurement.rotation = e.measurement.rotation * so3_exp(w);
    e.information = info;
    return e;
  };
  for (int k = 0; k + 1 < n; ++k) inst.problem.odometry.push_back(measure(k, k + 1));

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int l = 0; l + 1 < levels; ++l) {
    for (int k = 0; k < per; ++k) {
      if (u(rng) >= config.loop_closure_prob) continue;
      inst.problem.loop_closures.push_back(measure(l * per + k, (l + 1) * per + k));
    }
  }
  inst.outlier_labels.assign(inst.problem.loop_closures.size(), false);
  return inst;
}

LinearInstance inject_outliers(const LinearInstance& instance, double rate, std::uint64_t seed,
                               const OutlierOptions& options) {
  std::mt19937_64 rng(seed);
  LinearInstance out = instance;
  std::uniform_real_distribution<double> mag(options.linear_offset_min, options.linear_offset_max);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t i : choose(static_cast<std::size_t>(out.problem.observations.size()), rate, rng)) {
    const double offset = mag(rng);
    out.problem.observations(static_cast<Eigen::Index>(i)) += sign(rng) ? offset : -offset;
    out.outlier_labels[i] = true;
  }
  return out;
}

RegistrationInstance inject_outliers(const RegistrationInstance& instance, double rate, std::uint64_t seed,
                                     const OutlierOptions&) {
  std::mt19937_64 rng(seed);
  RegistrationInstance out = instance;
  const auto n = static_cast<std::size_t>(out.problem.target.cols());
  for (std::size_t i : choose(n, rate, rng)) {
    const std::size_t j = other_index(i, n, rng);
    out.problem.target.col(static_cast<Eigen::Index>(i)) = instance.problem.target.col(static_cast<Eigen::Index>(j));
    out.outlier_labels[i] = true;
  }
  return out;
}

ShapeInstance inject_outliers(const ShapeInstance& instance, double rate, std::uint64_t seed, const OutlierOptions&) {
  std::mt19937_64 rng(seed);
  ShapeInstance out = instance;
  const auto n = static_cast<std::size_t>(out.problem.image.cols());
  for (std::size_t i : choose(n, rate, rng)) {
    const std::size_t j = other_index(i, n, rng);
    out.problem.image.col(static_cast<Eigen::Index>(i)) = instance.problem.image.col(static_cast<Eigen::Index>(j));
    out.outlier_labels[i] = true;
  }
  return out;
}

PoseGraphInstance<2> inject_outliers(const PoseGraphInstance<2>& instance, double rate, std::uint64_t seed,
                                     const OutlierOptions& options) {
  return corrupt_loop_closures(instance, rate, seed, options);
}

PoseGraphInstance<3> inject_outliers(const PoseGraphInstance<3>& instance, double rate, std::uint64_t seed,
                                     const OutlierOptions& options) {
  return corrupt_loop_closures(instance, rate, seed, options);
}

}  // namespace robustkit
