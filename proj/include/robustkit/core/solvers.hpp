#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "robustkit/core/config.hpp"
#include "robustkit/core/gnc.hpp"
#include "robustkit/core/problem.hpp"
#include "robustkit/stats/stats.hpp"

namespace robustkit {

namespace detail {

// Weighted solve that reports a support too small or degenerate to fit as
// nullopt instead of throwing; other errors propagate.
template <EstimationProblem P>
std::optional<typename P::Estimate> try_weighted_solve(const P& problem, const std::vector<double>& w) {
  try {
    return problem.weighted_solve(w);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerate || e.code() == ErrorCode::kRankDeficient) return std::nullopt;
    throw;
  }
}

}  // namespace detail

// Greedy: repeatedly fit on the current inlier set and drop the single worst
// measurement until the inlier residual norm meets the bound.
template <EstimationProblem P>
RobustEstimate<typename P::Estimate> solve_greedy(const P& problem, const GreedyConfig& cfg) {
  validate(cfg);
  const std::size_t m = problem.size();
  if (m == 0) throw Error(ErrorCode::kDomain, "greedy: empty problem");

  RobustEstimate<typename P::Estimate> out;
  out.estimate = problem.weighted_solve(std::vector<double>(m, 1.0));
  IndexSet inliers = detail::all_indices(m);
  std::vector<double> w(m, 1.0);
  for (int it = 0;; ++it) {
    if (it > 0) {
      try {
        out.estimate = problem.weighted_solve(w);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kRankDeficient || e.code() == ErrorCode::kDegenerate) {
          throw Error(ErrorCode::kNoFeasibleSet,
                      std::string("greedy: remaining set cannot be fit: ") + e.what());
        }
        throw;
      }
    }
    const auto r = problem.residuals(out.estimate);
    const double bound = cfg.bound(inliers.size());
    out.trace.push_back({it, bound, inliers.size(), detail::sq_sum(r, inliers)});
    if (detail::norm_over(r, inliers, cfg.norm) <= bound) {
      out.inliers = std::move(inliers);
      out.weights = std::move(w);
      out.converged = true;
      out.iterations = it;
      return out;
    }
    if (inliers.size() == 1) {
      throw Error(ErrorCode::kNoFeasibleSet, "greedy: no subset satisfies the bound");
    }
    // Worst residual; ties go to the smallest index.
    auto worst = inliers.begin();
    for (auto i = inliers.begin(); i != inliers.end(); ++i) {
      if (r[*i] > r[*worst]) worst = i;
    }
    w[*worst] = 0.0;
    inliers.erase(worst);
  }
}

template <EstimationProblem P>
RobustEstimate<typename P::Estimate> solve_greedy(const P& problem, Norm norm, double bound) {
  if (!(bound >= 0.0)) throw Error(ErrorCode::kDomain, "greedy: bound must be non-negative");
  return solve_greedy(problem, GreedyConfig{norm, constant_bound(bound)});
}

// ADAPT: shrink an inlier threshold geometrically from the largest residual and
// stop once the inlier fit has been feasible and stable for several iterations.
template <EstimationProblem P>
RobustEstimate<typename P::Estimate> solve_adapt(const P& problem, const AdaptConfig& cfg) {
  validate(cfg);
  const std::size_t m = problem.size();
  if (m == 0) throw Error(ErrorCode::kDomain, "adapt: empty problem");

  RobustEstimate<typename P::Estimate> out;
  out.estimate = problem.weighted_solve(std::vector<double>(m, 1.0));
  auto r = problem.residuals(out.estimate);
  IndexSet inliers = detail::all_indices(m);
  double prev_sq = detail::sq_sum(r, inliers);
  out.trace.push_back({0, detail::max_over(r, inliers), m, prev_sq});
  double eps = cfg.thr_discount * detail::max_over(r, inliers);

  int streak = 0;
  int t = 1;
  for (; t <= cfg.max_iterations; ++t) {
    IndexSet next;
    for (std::size_t i = 0; i < m; ++i) {
      if (r[i] <= eps + cfg.residual_slack) next.push_back(i);
    }
    if (next.empty()) throw Error(ErrorCode::kEmptyInlierSet, "adapt: threshold rejected every measurement");
    out.estimate = problem.weighted_solve(detail::indicator(m, next));
    r = problem.residuals(out.estimate);

    const double cur_sq = detail::sq_sum(r, next);
    const bool feasible = detail::norm_over(r, next, cfg.norm) < cfg.tau(next.size());
    const bool settled = std::abs(cur_sq - prev_sq) < cfg.theta(next.size(), inliers.size());
    streak = (feasible && settled) ? streak + 1 : 0;
    inliers = std::move(next);
    prev_sq = cur_sq;
    out.trace.push_back({t, eps, inliers.size(), cur_sq});
    if (streak >= cfg.samples_to_converge) {
      out.converged = true;
      break;
    }
    eps = cfg.thr_discount * detail::max_over(r, inliers);
  }
  out.iterations = std::min(t, cfg.max_iterations);
  out.weights = detail::indicator(m, inliers);
  out.inliers = std::move(inliers);
  return out;
}

// GNC-TLS: graduated non-convexity with the truncated least squares surrogate.
template <EstimationProblem P>
RobustEstimate<typename P::Estimate> solve_gnc_tls(const P& problem, const GncConfig& cfg) {
  validate(cfg);
  const std::size_t m = problem.size();
  if (m == 0) throw Error(ErrorCode::kDomain, "gnc: empty problem");

  std::vector<double> w(m, 1.0);
  RobustEstimate<typename P::Estimate> out;
  out.estimate = problem.weighted_solve(w);
  auto r = problem.residuals(out.estimate);
  double mu = gnc_mu_init(r, cfg.epsilon, cfg.mu_floor);

  int t = 1;
  for (; t <= cfg.max_iterations; ++t) {
    w = gnc_weight_update(r, mu, cfg.epsilon);
    const bool binary = gnc_weights_settled(w, cfg.binary_tolerance);
    // Once binary the weights are snapped, so the estimate depends on the inlier set only.
    if (binary) snap_binary(w);
    // A support too small to fit keeps the previous estimate; the weights keep
    // sharpening from the old residuals until they binarize.
    if (auto x = detail::try_weighted_solve(problem, w)) {
      out.estimate = std::move(*x);
      r = problem.residuals(out.estimate);
    }
    const IndexSet sup = detail::support(w);
    out.trace.push_back({t, mu, sup.size(), detail::sq_sum(r, sup)});
    mu *= cfg.mu_update_factor;
    if (binary) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(t, cfg.max_iterations);
  out.inliers = detail::support(w);
  out.weights = std::move(w);
  return out;
}

// ADAPT-MinT: ADAPT without a noise bound. Stops when the normalized separation
// between the low- and high-residual clusters stays flat, and returns the inlier
// set from before the plateau.
template <EstimationProblem P>
RobustEstimate<typename P::Estimate> solve_adapt_mint(const P& problem, const AdaptMintConfig& cfg) {
  validate(cfg);
  const std::size_t m = problem.size();
  if (m < 2) throw Error(ErrorCode::kTooFew, "adapt_mint: needs at least two measurements");

  RobustEstimate<typename P::Estimate> out;
  out.estimate = problem.weighted_solve(std::vector<double>(m, 1.0));
  auto r = problem.residuals(out.estimate);
  const double delta0 = clusters_separation(r);
  if (!(delta0 > 0.0)) {
    throw Error(ErrorCode::kDegenerateClusters, "adapt_mint: initial residuals do not separate");
  }
  const double r_max = *std::max_element(r.begin(), r.end());
  double eps = cfg.thr_discount * r_max;

  std::vector<IndexSet> history{detail::all_indices(m)};
  std::vector<double> deltas;
  std::vector<double> sigmas;  // sigmas[k-1] is the moving std after iteration k
  out.trace.push_back({0, r_max, m, detail::sq_sum(r, history.back())});

  const auto s = static_cast<std::size_t>(cfg.samples_to_converge);
  std::optional<IndexSet> settled;
  int t = 1;
  for (; t <= cfg.max_iterations; ++t) {
    IndexSet cur;
    for (std::size_t i = 0; i < m; ++i) {
      if (r[i] <= eps + cfg.residual_slack) cur.push_back(i);
    }
    // Trimmed below what the model can fit: stop with the last fitted set.
    if (cur.empty()) break;
    auto x = detail::try_weighted_solve(problem, detail::indicator(m, cur));
    if (!x) break;
    out.estimate = std::move(*x);
    r = problem.residuals(out.estimate);
    const double used_eps = eps;
    eps = cfg.thr_discount * detail::max_over(r, cur);
    deltas.push_back(clusters_separation(r) / delta0);
    sigmas.push_back(moving_std(deltas, cfg.window_size));
    out.trace.push_back({t, used_eps, cur.size(), detail::sq_sum(r, cur)});
    history.push_back(std::move(cur));

    const auto tt = static_cast<std::size_t>(t);
    if (tt > s) {
      const bool flat = std::all_of(sigmas.end() - static_cast<std::ptrdiff_t>(s) - 1, sigmas.end() - 1,
                                    [&](double v) { return v < cfg.converg_thr; });
      if (flat) {
        settled = history[tt - s];
        break;
      }
    }
  }
  out.iterations = std::min(t, cfg.max_iterations);
  out.converged = settled.has_value();
  out.inliers = settled ? std::move(*settled) : history.back();
  out.weights = detail::indicator(m, out.inliers);
  return out;
}

// GNC-MinT: repeated GNC-TLS runs with a shrinking threshold; keeps the inlier
// set whose residuals best fit a scaled chi-square distribution.
template <EstimationProblem P>
RobustEstimate<typename P::Estimate> solve_gnc_mint(const P& problem, const GncMintConfig& cfg) {
  validate(cfg);
  const std::size_t m = problem.size();
  if (m == 0) throw Error(ErrorCode::kDomain, "gnc_mint: empty problem");
  const int dof = cfg.dof > 0 ? cfg.dof : problem.residual_dof();

  using Estimate = typename P::Estimate;
  struct Candidate {
    Estimate estimate;
    std::vector<double> weights;
    double score;
  };

  const std::vector<double> w0(m, 1.0);
  const Estimate x0 = problem.weighted_solve(w0);
  const auto r0 = problem.residuals(x0);
  double eps = cfg.noise_up_bnd;
  const double mu0 = gnc_mu_init(r0, eps, cfg.mu_floor);

  RobustEstimate<Estimate> out;
  out.estimate = x0;
  std::vector<double> w = w0;
  auto r = r0;
  double mu = mu0;
  std::vector<Candidate> stash;
  int worse_streak = 0;
  double prev_score = std::numeric_limits<double>::quiet_NaN();
  bool terminated = false;

  int t = 1;
  for (; t <= cfg.max_iterations; ++t) {
    w = gnc_weight_update(r, mu, eps);
    const bool binary = gnc_weights_settled(w, cfg.binary_tolerance);
    if (binary) snap_binary(w);
    if (auto x = detail::try_weighted_solve(problem, w)) {
      out.estimate = std::move(*x);
      r = problem.residuals(out.estimate);
    }
    const IndexSet inl = detail::support(w);
    out.trace.push_back({t, mu, inl.size(), detail::sq_sum(r, inl)});
    mu *= cfg.mu_update_factor;
    if (!binary) continue;

    std::vector<double> inlier_r;
    inlier_r.reserve(inl.size());
    for (std::size_t i : inl) inlier_r.push_back(r[i]);
    // Too few inliers to estimate a scale: never preferred.
    const double score = inlier_r.size() >= 2 ? fit_chi(inlier_r, dof).statistic
                                              : std::numeric_limits<double>::infinity();
    stash.push_back({out.estimate, w, score});
    double best = score;
    for (const auto& c : stash) best = std::min(best, c.score);

    if (stash.size() > 1 && score == prev_score) {
      terminated = true;
      break;
    }
    if (score > best) {
      if (++worse_streak >= cfg.samples_to_converge) {
        terminated = true;
        break;
      }
    } else {
      worse_streak = 0;
    }
    prev_score = score;

    // Next threshold: halfway to the largest inlier residual still below eps.
    double below = -1.0;
    for (std::size_t i : inl) {
      if (r[i] < eps) below = std::max(below, r[i]);
    }
    if (below < 0.0) {
      terminated = true;
      break;
    }
    const double next_eps = 0.5 * (eps + below);
    if (next_eps < cfg.noise_low_bnd || next_eps >= eps) {
      terminated = true;
      break;
    }
    eps = next_eps;
    mu = mu0;
    w = w0;
    r = r0;
  }
  out.iterations = std::min(t, cfg.max_iterations);
  if (stash.empty()) {
    out.inliers = detail::support(w);
    out.weights = std::move(w);
    out.converged = false;
    return out;
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < stash.size(); ++j) {
    if (stash[j].score < stash[best].score) best = j;
  }
  out.estimate = stash[best].estimate;
  out.weights = stash[best].weights;
  out.inliers = detail::support(out.weights);
  out.converged = terminated;
  return out;
}

}  // namespace robustkit
