#include "robustkit/experiment/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "robustkit/core/error.hpp"
#include "robustkit/core/oracle.hpp"
#include "robustkit/core/solvers.hpp"
#include "robustkit/io/generators.hpp"
#include "robustkit/problems/lie.hpp"
#include "robustkit/problems/linear.hpp"
#include "robustkit/stats/stats.hpp"

namespace robustkit {
namespace {

void record(SuiteResult& s, bool ok, const std::string& what) {
  ++s.cases;
  if (!ok) {
    if (s.failures == 0) s.detail = what;
    ++s.failures;
  }
}

LinearProblem seeded_linear(std::uint64_t seed, std::size_t m, double rate, double sigma) {
  const auto inst = inject_outliers(gen_linear(m, 2, sigma, seed), rate, mix_seed(seed));
  return {inst.problem.design, inst.problem.observations};
}

double refit_sq_sum(const LinearProblem& p, const IndexSet& inliers) {
  const auto x = p.weighted_solve(detail::indicator(p.size(), inliers));
  return detail::sq_sum(p.residuals(x), inliers);
}

}  // namespace

SuiteResult verify_toy_example() {
  SuiteResult s;
  s.name = "toy";
  const LinearProblem p(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(0.0, 0.0, 4.0));
  const double eps = 2.58;

  GncConfig g;
  g.epsilon = eps;
  const auto gnc = solve_gnc_tls(p, g);
  record(s, std::abs(gnc.estimate(0)) < 1e-9 && gnc.inliers == IndexSet{0, 1},
         "gnc: x=" + std::to_string(gnc.estimate(0)));

  const auto mts = oracle_enumerate(p, Formulation::kMTS, std::sqrt(11.35));
  record(s,
         mts.outliers.empty() && mts.estimate && std::abs((*mts.estimate)(0) - 4.0 / 3.0) < 1e-9 &&
             std::abs(mts.inlier_norm * mts.inlier_norm - 32.0 / 3.0) < 1e-9,
         "mts oracle");

  const auto mc = oracle_enumerate(p, Formulation::kMC, eps);
  record(s, mc.outliers.empty(), "mc oracle rejected " + std::to_string(mc.outliers.size()));

  const auto tls = oracle_enumerate(p, Formulation::kTLS, eps);
  record(s, tls.outliers == IndexSet{2} && tls.estimate && std::abs((*tls.estimate)(0)) < 1e-9, "tls oracle");
  return s;
}

SuiteResult verify_relationship_suite(std::uint64_t seed, int instances, std::size_t m, double outlier_rate) {
  SuiteResult s;
  s.name = "relationship";
  const double sigma = 0.1;
  const double eps = sigma * std::sqrt(chi2_inv(0.99, 1));
  std::size_t informational_total = 0;
  std::size_t informational_held = 0;
  for (int k = 0; k < instances; ++k) {
    const auto p = seeded_linear(derive_seed(seed, 1, static_cast<std::uint64_t>(k)), m, outlier_rate, sigma);
    const auto report = verify_relationship(p, eps);
    for (const auto& c : report.clauses) {
      if (!c.required) {
        ++informational_total;
        informational_held += c.passed ? 1 : 0;
        continue;
      }
      record(s, c.passed, "instance " + std::to_string(k) + " " + c.name + ": " + c.detail);
    }
  }
  const std::string note = "informational clauses held " + std::to_string(informational_held) + "/" +
                           std::to_string(informational_total);
  s.detail = s.detail.empty() ? note : s.detail + "; " + note;
  return s;
}

SuiteResult verify_bound_suite(std::uint64_t seed, int instances, std::size_t m) {
  SuiteResult s;
  s.name = "bounds";
  const double sigma = 0.1;
  const double eps = sigma * std::sqrt(chi2_inv(0.99, 1));
  const BoundFn tau = [sigma](std::size_t n) {
    return n == 0 ? 0.0 : sigma * std::sqrt(chi2_inv(0.99, static_cast<double>(n)));
  };
  ChiDiffQuantileCache theta_q(0.05);
  const ThetaFn theta = [&](std::size_t n1, std::size_t n2) {
    return std::sqrt(theta_q(static_cast<double>(n1), static_cast<double>(n2), sigma * sigma));
  };

  for (int k = 0; k < instances; ++k) {
    const auto p = seeded_linear(derive_seed(seed, 2, static_cast<std::uint64_t>(k)), m, 0.3, sigma);
    std::vector<std::pair<std::string, IndexSet>> outputs;
    auto attempt = [&](const std::string& name, auto&& solve) {
      try {
        outputs.emplace_back(name, solve().inliers);
      } catch (const Error&) {
        // A solver giving up is not a bound violation.
      }
    };
    attempt("greedy_mc", [&] { return solve_greedy(p, Norm::kLinf, eps); });
    attempt("greedy_mts", [&] { return solve_greedy(p, GreedyConfig{Norm::kL2, tau}); });
    attempt("adapt_mts", [&] {
      AdaptConfig c;
      c.tau = tau;
      c.theta = theta;
      return solve_adapt(p, c);
    });
    attempt("adapt_mint", [&] { return solve_adapt_mint(p, AdaptMintConfig{}); });
    attempt("gnc", [&] {
      GncConfig c;
      c.epsilon = eps;
      return solve_gnc_tls(p, c);
    });
    attempt("gnc_mint", [&] {
      GncMintConfig c;
      c.noise_up_bnd = 3.0 * eps;
      c.noise_low_bnd = eps / 3.0;
      return solve_gnc_mint(p, c);
    });

    const double r_empty = refit_sq_sum(p, detail::all_indices(m));
    for (const auto& [name, inliers] : outputs) {
      const std::size_t rejected = m - inliers.size();
      if (rejected == 0 || inliers.size() < p.minimal_support()) continue;
      const double r_o = refit_sq_sum(p, inliers);
      if (!(r_o < r_empty)) continue;
      const double chi = suboptimality_bound(r_empty, r_o);
      const double r_star = oracle_min_sq_sum(p, rejected);
      const double truth = (r_o - r_star) / (r_empty - r_star);
      std::ostringstream os;
      os << "instance " << k << " " << name << ": chi=" << chi << " ratio=" << truth;
      record(s, chi >= truth - 1e-12, os.str());
    }
  }
  return s;
}

PoseGraph2 small_cycle_graph(std::uint64_t seed, std::size_t loop_closures, std::size_t corrupted) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> turn(-0.6, 0.6);
  const double sigma_t = 0.05;
  const double sigma_r = 0.02;
  constexpr int kPoses = 6;

  PoseGraph2 g;
  std::vector<Pose2> truth(kPoses);
  for (int i = 1; i < kPoses; ++i) {
    Pose2 step;
    step.rotation = so2_exp(turn(rng));
    step.translation = Eigen::Vector2d(1.0, 0.0);
    truth[i] = truth[i - 1] * step;
  }
  for (int i = 0; i < kPoses; ++i) g.vertices[i] = truth[i];

  Information<2> info = Information<2>::Zero();
  info(0, 0) = info(1, 1) = 1.0 / (sigma_t * sigma_t);
  info(2, 2) = 1.0 / (sigma_r * sigma_r);
  auto noisy = [&](const Pose2& rel) {
    Pose2 out = rel;
    out.translation += sigma_t * Eigen::Vector2d(n01(rng), n01(rng));
    out.rotation = rel.rotation * so2_exp(sigma_r * n01(rng));
    return out;
  };
  for (int i = 0; i + 1 < kPoses; ++i) {
    g.odometry.push_back({i, i + 1, noisy(truth[i].inverse() * truth[i + 1]), info});
  }

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < kPoses; ++i) {
    for (int j = i + 2; j < kPoses; ++j) pairs.emplace_back(i, j);
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(std::min(loop_closures, pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    Pose2 meas = noisy(truth[i].inverse() * truth[j]);
    if (k < corrupted) {
      meas.rotation = meas.rotation * so2_exp(2.0);
      meas.translation += Eigen::Vector2d(2.0, -1.5);
    }
    g.loop_closures.push_back({i, j, meas, info});
  }
  return g;
}

SuiteResult verify_cycle_suite(std::uint64_t seed, int graphs) {
  SuiteResult s;
  s.name = "cycles";
  for (int k = 0; k < graphs; ++k) {
    const std::size_t lcs = 2 + static_cast<std::size_t>(k % 2);
    const std::size_t bad = k % 3 == 0 ? 1 : 0;
    const PoseGraph2 g = small_cycle_graph(derive_seed(seed, 3, static_cast<std::uint64_t>(k)), lcs, bad);
    const CycleBounds cb = cycle_bounds(g);
    const auto init = odometry_initialization(g);
    const std::vector<double> odo(g.odometry.size(), 1.0);
    const std::size_t n = g.loop_closures.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<double> w(n, 0.0);
      double sum_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1) {
          w[i] = 1.0;
          sum_b += cb.bounds[i];
        }
      }
      const double f = pgo_weighted_solve(g, odo, w, init).cost;
      std::ostringstream os;
      os << "graph " << k << " subset " << mask << ": f=" << f << " sum_b=" << sum_b;
      record(s, f >= sum_b - 1e-9 * std::max(1.0, sum_b), os.str());
    }
  }
  return s;
}

std::vector<SuiteResult> run_verification(std::uint64_t seed, const std::vector<std::string>& suites) {
  std::vector<SuiteResult> out;
  for (const auto& name : suites) {
    if (name == "toy") {
      out.push_back(verify_toy_example());
    } else if (name == "relationship") {
      out.push_back(verify_relationship_suite(seed));
    } else if (name == "bounds") {
      out.push_back(verify_bound_suite(seed));
    } else if (name == "cycles") {
      out.push_back(verify_cycle_suite(seed));
    } else {
      throw Error(ErrorCode::kConfig, "unknown verification suite '" + name + "'");
    }
  }
  return out;
}

}  // namespace robustkit
