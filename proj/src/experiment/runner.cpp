#include "robustkit/experiment/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>
#include <variant>

#include "robustkit/core/error.hpp"
#include "robustkit/core/oracle.hpp"
#include "robustkit/core/solvers.hpp"
#include "robustkit/experiment/metrics.hpp"
#include "robustkit/io/g2o.hpp"
#include "robustkit/problems/linear.hpp"
#include "robustkit/stats/stats.hpp"

namespace robustkit {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Zero-noise generators still need a strictly positive threshold.
constexpr double kSigmaFloor = 1e-9;
constexpr double kInlierProbability = 0.99;

ChiDiffQuantileCache& theta_cache(double p) {
  static std::mutex mutex;
  static std::map<double, std::unique_ptr<ChiDiffQuantileCache>> caches;
  std::lock_guard lock(mutex);
  auto& slot = caches[p];
  if (!slot) slot = std::make_unique<ChiDiffQuantileCache>(p);
  return *slot;
}

struct Thresholds {
  double sigma;
  int dof;
};

ThetaFn make_theta(const AlgorithmSpec& a, Thresholds th) {
  ChiDiffQuantileCache* cache = &theta_cache(a.theta_probability);
  const double s2 = th.sigma * th.sigma;
  const double d = th.dof;
  if (a.theta_mode == ThetaMode::kSqrtQuantile) {
    return [cache, s2, d](std::size_t n1, std::size_t n2) {
      return std::sqrt((*cache)(static_cast<double>(n1) * d, static_cast<double>(n2) * d, s2));
    };
  }
  return [cache, s2, d](std::size_t n1, std::size_t n2) {
    return (*cache)(static_cast<double>(n1) * d, static_cast<double>(n2) * d, s2);
  };
}

BoundFn make_tau(Thresholds th) {
  return [th](std::size_t n) {
    if (n == 0) return 0.0;
    return th.sigma * std::sqrt(chi2_inv(kInlierProbability, static_cast<double>(n) * th.dof));
  };
}

template <class P>
RobustEstimate<typename P::Estimate> run_algorithm(const P& problem, const AlgorithmSpec& a, Thresholds th) {
  const double eps = a.epsilon.value_or(th.sigma * std::sqrt(chi2_inv(kInlierProbability, th.dof)));
  const std::string& n = a.name;
  if (n == "greedy_mc") return solve_greedy(problem, GreedyConfig{Norm::kLinf, constant_bound(eps)});
  if (n == "greedy_mts") return solve_greedy(problem, GreedyConfig{Norm::kL2, make_tau(th)});
  if (n == "adapt_mc" || n == "adapt_mts") {
    AdaptConfig cfg;
    cfg.norm = n == "adapt_mc" ? Norm::kLinf : Norm::kL2;
    cfg.tau = n == "adapt_mc" ? constant_bound(eps) : make_tau(th);
    cfg.theta = make_theta(a, th);
    if (a.max_iterations) cfg.max_iterations = *a.max_iterations;
    if (a.samples_to_converge) cfg.samples_to_converge = *a.samples_to_converge;
    if (a.thr_discount) cfg.thr_discount = *a.thr_discount;
    return solve_adapt(problem, cfg);
  }
  if (n == "adapt_mint") {
    AdaptMintConfig cfg;
    if (a.max_iterations) cfg.max_iterations = *a.max_iterations;
    if (a.samples_to_converge) cfg.samples_to_converge = *a.samples_to_converge;
    if (a.thr_discount) cfg.thr_discount = *a.thr_discount;
    return solve_adapt_mint(problem, cfg);
  }
  if (n == "gnc") {
    GncConfig cfg;
    cfg.epsilon = eps;
    if (a.max_iterations) cfg.max_iterations = *a.max_iterations;
    if (a.mu_update_factor) cfg.mu_update_factor = *a.mu_update_factor;
    return solve_gnc_tls(problem, cfg);
  }
  if (n == "gnc_mint") {
    GncMintConfig cfg;
    cfg.noise_up_bnd = a.noise_up_bnd.value_or(3.0 * eps);
    cfg.noise_low_bnd = a.noise_low_bnd.value_or(eps / 3.0);
    if (a.max_iterations) cfg.max_iterations = *a.max_iterations;
    if (a.samples_to_converge) cfg.samples_to_converge = *a.samples_to_converge;
    if (a.mu_update_factor) cfg.mu_update_factor = *a.mu_update_factor;
    return solve_gnc_mint(problem, cfg);
  }
  throw Error(ErrorCode::kConfig, "unknown algorithm '" + n + "'");
}

// Least-squares objective over the weighted measurements, plus the always-kept
// odometry for pose graphs.
template <class P>
double ls_objective(const P& problem, const std::vector<double>& w) {
  const auto x = problem.weighted_solve(w);
  const auto r = problem.residuals(x);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += w[i] * r[i] * r[i];
  return s;
}

template <int D>
double ls_objective(const PoseGraphProblem<D>& problem, const std::vector<double>& w) {
  const auto x = problem.weighted_solve(w);
  const std::vector<double> odo(problem.graph().odometry.size(), 1.0);
  return pgo_cost(problem.graph(), odo, w, x);
}

template <class P>
double chi_bound(const P& problem, const IndexSet& inliers) {
  try {
    const double r_empty = ls_objective(problem, std::vector<double>(problem.size(), 1.0));
    const double r_o = ls_objective(problem, detail::indicator(problem.size(), inliers));
    return suboptimality_bound(r_empty, r_o);
  } catch (const Error&) {
    return kNaN;
  }
}

void fill_pose_errors(TrialRecord& row, const Eigen::Matrix3d& r_est, const Eigen::Matrix3d& r_true,
                      double trans_err) {
  row.rot_err_deg = rotation_error_deg(r_est, r_true);
  row.trans_err = trans_err;
}

void measure(TrialRecord& row, const LinearProblem&, const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  row.trans_err = (est - truth).norm();
}
void measure(TrialRecord& row, const RegistrationProblem&, const RigidTransform& est, const RigidTransform& truth) {
  fill_pose_errors(row, est.rotation, truth.rotation, (est.translation - truth.translation).norm());
}
void measure(TrialRecord& row, const ShapeProblem&, const WeakPerspectivePose& est,
             const WeakPerspectivePose& truth) {
  fill_pose_errors(row, est.rotation, truth.rotation, (est.translation - truth.translation).norm());
}
template <int D>
void measure(TrialRecord& row, const PoseGraphProblem<D>&, const Trajectory<D>& est, const Trajectory<D>& truth) {
  row.ate = absolute_trajectory_error<D>(est, truth);
}

LinearProblem make_problem(const LinearData& d) { return {d.design, d.observations}; }
RegistrationProblem make_problem(const RegistrationData& d) { return {d.source, d.target}; }
ShapeProblem make_problem(const ShapeData& d) { return {d.model, d.image}; }
template <int D>
PoseGraphProblem<D> make_problem(const PoseGraph<D>& g) {
  return PoseGraphProblem<D>(g);
}

template <int D>
PoseGraphInstance<D> instance_from_graph(const PoseGraph<D>& g) {
  PoseGraphInstance<D> inst;
  inst.problem = g;
  inst.ground_truth = vertex_poses(g);
  inst.outlier_labels.assign(g.loop_closures.size(), false);
  return inst;
}

}  // namespace

AnyInstance generate_instance(const ExperimentConfig& cfg, const AnyPoseGraph* g2o, double rate, std::uint64_t seed) {
  const ProblemSpec& p = cfg.problem;
  const std::uint64_t gen_seed = derive_seed(seed, 1, 0);
  const std::uint64_t pose_seed = derive_seed(seed, 2, 0);
  const std::uint64_t outlier_seed = derive_seed(seed, 3, 0);
  auto finish = [&](auto inst) -> AnyInstance {
    inst.seed = seed;
    return inject_outliers(inst, rate, outlier_seed, p.outliers);
  };
  switch (p.kind) {
    case ProblemKind::kLinear:
      return finish(gen_linear(p.rows, p.cols, p.noise_sigma, gen_seed));
    case ProblemKind::kRegistration: {
      std::mt19937_64 rng(pose_seed);
      RigidTransform t;
      t.rotation = random_rotation(rng);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int k = 0; k < 3; ++k) t.translation(k) = u(rng);
      return finish(gen_registration(p.count, t, p.noise_sigma, gen_seed));
    }
    case ProblemKind::kShape: {
      std::mt19937_64 rng(pose_seed);
      const Eigen::Matrix3d r = random_rotation(rng);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Eigen::Vector2d t;
      for (int k = 0; k < 2; ++k) t(k) = u(rng);
      return finish(gen_shape(p.count, p.scale, r, t, p.noise_sigma, gen_seed));
    }
    case ProblemKind::kGrid2d:
      return finish(gen_grid_2d(p.grid, gen_seed));
    case ProblemKind::kSphere3d:
      return finish(gen_sphere_3d(p.sphere, gen_seed));
    case ProblemKind::kG2o:
      return std::visit([&](const auto& g) -> AnyInstance { return finish(instance_from_graph(g)); }, *g2o);
  }
  throw Error(ErrorCode::kConfig, "unhandled problem type");
}

namespace {

template <class Inst>
void run_on_instance(const Inst& inst, const ExperimentConfig& cfg, Thresholds th, std::vector<TrialRecord*>& rows) {
  const auto problem = make_problem(inst.problem);
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    TrialRecord& row = *rows[a];
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto est = run_algorithm(problem, cfg.algorithms[a], th);
      row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      measure(row, problem, est.estimate, inst.ground_truth);
      const auto rates = detection_rates(est.inliers, inst.outlier_labels);
      row.tp_rate = rates.tp_rate;
      row.fp_rate = rates.fp_rate;
      row.iterations = est.iterations;
      row.converged = est.converged;
      row.chi_bound = chi_bound(problem, est.inliers);
    } catch (const std::exception& e) {
      row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      row.error = e.what();
      row.converged = false;
    }
  }
}

TrialRecord blank_row(const std::string& label, double rate, int trial, std::uint64_t seed) {
  TrialRecord r;
  r.algorithm = label;
  r.rate = rate;
  r.trial = trial;
  r.seed = seed;
  r.rot_err_deg = r.trans_err = r.ate = r.tp_rate = r.fp_rate = r.chi_bound = kNaN;
  return r;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

double threshold_sigma(const ProblemSpec& p) {
  switch (p.kind) {
    case ProblemKind::kGrid2d:
    case ProblemKind::kSphere3d:
    case ProblemKind::kG2o:
      return 1.0;
    default:
      return std::max(p.noise_sigma, kSigmaFloor);
  }
}

int problem_dof(const ProblemSpec& p) {
  switch (p.kind) {
    case ProblemKind::kLinear: return 1;
    case ProblemKind::kRegistration: return 3;
    case ProblemKind::kShape: return 2;
    case ProblemKind::kGrid2d: return 3;
    case ProblemKind::kSphere3d: return 6;
    case ProblemKind::kG2o: return 0;  // decided by the file's dimension
  }
  return 1;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, int threads) {
  validate(cfg);
  std::unique_ptr<AnyPoseGraph> g2o;
  Thresholds th{threshold_sigma(cfg.problem), problem_dof(cfg.problem)};
  if (cfg.problem.kind == ProblemKind::kG2o) {
    g2o = std::make_unique<AnyPoseGraph>(read_g2o_file(cfg.problem.g2o_path));
    th.dof = std::holds_alternative<PoseGraph2>(*g2o) ? 3 : 6;
  }

  const std::size_t n_alg = cfg.algorithms.size();
  const std::size_t n_rate = cfg.outlier_rates.size();
  const auto n_trial = static_cast<std::size_t>(cfg.trials);
  std::vector<TrialRecord> rows;
  rows.reserve(n_alg * n_rate * n_trial);
  for (std::size_t a = 0; a < n_alg; ++a) {
    for (std::size_t ri = 0; ri < n_rate; ++ri) {
      for (std::size_t k = 0; k < n_trial; ++k) {
        rows.push_back(blank_row(cfg.algorithms[a].label, cfg.outlier_rates[ri], static_cast<int>(k),
                                 derive_seed(cfg.base_seed, ri, k)));
      }
    }
  }

  std::atomic<std::size_t> next{0};
  const std::size_t n_tasks = n_rate * n_trial;
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const std::size_t ri = task / n_trial;
      const std::size_t k = task % n_trial;
      std::vector<TrialRecord*> mine;
      for (std::size_t a = 0; a < n_alg; ++a) mine.push_back(&rows[(a * n_rate + ri) * n_trial + k]);
      const std::uint64_t seed = mine.front()->seed;
      try {
        const AnyInstance inst = generate_instance(cfg, g2o.get(), cfg.outlier_rates[ri], seed);
        std::visit([&](const auto& i) { run_on_instance(i, cfg, th, mine); }, inst);
      } catch (const std::exception& e) {
        for (TrialRecord* r : mine) {
          r->error = e.what();
          r->converged = false;
        }
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, n_tasks);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += r.algorithm + ',' + fmt(r.rate) + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
           fmt(r.rot_err_deg) + ',' + fmt(r.trans_err) + ',' + fmt(r.ate) + ',' + fmt(r.tp_rate) + ',' +
           fmt(r.fp_rate) + ',' + fmt(r.wall_time_s) + ',' + std::to_string(r.iterations) + ',' +
           (r.converged ? "1" : "0") + ',' + fmt(r.chi_bound) + '\n';
  }
  return out;
}

nlohmann::json summarize(const std::vector<TrialRecord>& records) {
  struct Group {
    std::string algorithm;
    double rate;
    std::vector<const TrialRecord*> rows;
  };
  std::vector<Group> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const Group& g) { return g.algorithm == r.algorithm && g.rate == r.rate; });
    if (it == groups.end()) {
      groups.push_back({r.algorithm, r.rate, {}});
      it = groups.end() - 1;
    }
    it->rows.push_back(&r);
  }

  using Getter = double (*)(const TrialRecord&);
  const std::vector<std::pair<const char*, Getter>> columns{
      {"rot_err_deg", [](const TrialRecord& r) { return r.rot_err_deg; }},
      {"trans_err", [](const TrialRecord& r) { return r.trans_err; }},
      {"ate", [](const TrialRecord& r) { return r.ate; }},
      {"tp_rate", [](const TrialRecord& r) { return r.tp_rate; }},
      {"fp_rate", [](const TrialRecord& r) { return r.fp_rate; }},
      {"wall_time_s", [](const TrialRecord& r) { return r.wall_time_s; }},
      {"iterations", [](const TrialRecord& r) { return static_cast<double>(r.iterations); }},
      {"converged", [](const TrialRecord& r) { return r.converged ? 1.0 : 0.0; }},
      {"chi_bound", [](const TrialRecord& r) { return r.chi_bound; }},
  };

  nlohmann::json out = nlohmann::json::array();
  for (const auto& g : groups) {
    nlohmann::json entry;
    entry["algorithm"] = g.algorithm;
    entry["rate"] = g.rate;
    entry["trials"] = g.rows.size();
    std::size_t failures = 0;
    for (const auto* r : g.rows) failures += r->error.empty() ? 0 : 1;
    entry["failures"] = failures;
    nlohmann::json med = nlohmann::json::object();
    nlohmann::json avg = nlohmann::json::object();
    for (const auto& [name, get] : columns) {
      std::vector<double> v;
      for (const auto* r : g.rows) {
        const double x = get(*r);
        if (!std::isnan(x)) v.push_back(x);
      }
      med[name] = number(median(v));
      avg[name] = number(mean(v));
    }
    entry["median"] = std::move(med);
    entry["mean"] = std::move(avg);
    out.push_back(std::move(entry));
  }
  return nlohmann::json{{"groups", std::move(out)}};
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <int D>
nlohmann::json trajectory_json(const Trajectory<D>& t) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : t) out.push_back({{"rotation", matrix_json(p.rotation)}, {"translation", matrix_json(p.translation)}});
  return out;
}

}  // namespace

nlohmann::json instance_to_json(const AnyInstance& instance) {
  return std::visit(
      [](const auto& inst) {
        using T = std::decay_t<decltype(inst)>;
        nlohmann::json j;
        j["seed"] = inst.seed;
        j["outlier_labels"] = inst.outlier_labels;
        if constexpr (std::is_same_v<T, LinearInstance>) {
          j["type"] = "linear";
          j["design"] = matrix_json(inst.problem.design);
          j["observations"] = matrix_json(inst.problem.observations);
          j["ground_truth"] = matrix_json(inst.ground_truth);
        } else if constexpr (std::is_same_v<T, RegistrationInstance>) {
          j["type"] = "registration";
          j["source"] = matrix_json(inst.problem.source);
          j["target"] = matrix_json(inst.problem.target);
          j["ground_truth"] = {{"rotation", matrix_json(inst.ground_truth.rotation)},
                               {"translation", matrix_json(inst.ground_truth.translation)}};
        } else if constexpr (std::is_same_v<T, ShapeInstance>) {
          j["type"] = "shape";
          j["model"] = matrix_json(inst.problem.model);
          j["image"] = matrix_json(inst.problem.image);
          j["ground_truth"] = {{"scale", inst.ground_truth.scale},
                               {"rotation", matrix_json(inst.ground_truth.rotation)},
                               {"translation", matrix_json(inst.ground_truth.translation)}};
        } else {
          j["type"] = std::is_same_v<T, PoseGraphInstance<2>> ? "pose_graph_2d" : "pose_graph_3d";
          j["g2o"] = write_g2o(inst.problem);
          j["ground_truth"] = trajectory_json(inst.ground_truth);
        }
        return j;
      },
      instance);
}

}  // namespace robustkit
